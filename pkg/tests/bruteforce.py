"""Pure-Python reference estimators, written straight from the defining sums.

Inputs are plain lists so these share no code path with the package. With
``Fraction`` inputs the results are exact.
"""


def _pixels(frames):
    h, w = len(frames[0]), len(frames[0][0])
    return [(r, c) for r in range(h) for c in range(w)], h, w


def _image(h, w, fn):
    return [[fn(r, c) for c in range(w)] for r in range(h)]


def gi(buckets, frames):
    m = len(buckets)
    _, h, w = _pixels(frames)

    def at(r, c):
        si = sum(buckets[n] * frames[n][r][c] for n in range(m))
        s = sum(buckets)
        i = sum(frames[n][r][c] for n in range(m))
        return si / m - (s / m) * (i / m)

    return _image(h, w, at)


def pair_sum(buckets, frames, term, divisor_factor):
    n_pairs = len(buckets) - 1
    _, h, w = _pixels(frames)

    def at(r, c):
        total = 0
        for n in range(n_pairs):
            total += term(buckets[n], buckets[n + 1], frames[n][r][c], frames[n + 1][r][c])
        return total / (divisor_factor * n_pairs)

    return _image(h, w, at)


TERMS = {
    "igi": (lambda s0, s1, i0, i1: (s1 - s0) * (i1 - i0), 2),
    "igi_s": (lambda s0, s1, i0, i1: (s1 - s0) * i1, 1),
    "igi_i": (lambda s0, s1, i0, i1: s1 * (i1 - i0), 1),
    "igi_s_neg": (lambda s0, s1, i0, i1: -(s1 - s0) * i0, 1),
    "igi_i_neg": (lambda s0, s1, i0, i1: -s0 * (i1 - i0), 1),
}


def estimator(name, buckets, frames):
    if name == "gi":
        return gi(buckets, frames)
    term, factor = TERMS[name]
    return pair_sum(buckets, frames, term, factor)


def four_terms(buckets, frames):
    pieces = [
        lambda s0, s1, i0, i1: s1 * i1,
        lambda s0, s1, i0, i1: s0 * i0,
        lambda s0, s1, i0, i1: -s1 * i0,
        lambda s0, s1, i0, i1: -s0 * i1,
    ]
    return [pair_sum(buckets, frames, p, 2) for p in pieces]
