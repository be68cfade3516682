"""50-digit reference values frozen into the Rust tests.

Run with `python3 high_precision.py`; the printed constants are pasted into
tests/model_oracles.rs. Nothing here imports the Rust implementation.
"""
from mpmath import mp, mpf, exp, log, ncdf

mp.dps = 50

MNL = dict(
    asc_low=mpf("22.0"), asc_med=mpf("11.8"),
    b_med=[mpf(s) for s in ("13.7", "2.59", "3.11", "0.48", "0.46", "0.74")],
    b_high=[mpf(s) for s in ("11.7", "-9.86", "18.6", "0.58", "0.46", "0.74")],
)
ETA = [mpf(s) for s in ("11.1", "-0.28", "5.78", "0.33", "0.18", "1.02")]
MU1, MU2 = mpf("1.5"), mpf("10.1")

# fixed 5-row synthetic frame: (speed, density, freespeed, lanes, prev_med, prev_high, chosen)
FRAME = [
    ("0.25", "0.5", "0.75", "0", 0, 0, 1),
    ("0.9", "0.1", "0.8", "1", 1, 0, 2),
    ("0.6", "0.3", "0.95", "0.3333333333333333", 0, 1, 3),
    ("0.05", "0.9", "0.2", "0.6666666666666666", 0, 0, 1),
    ("0.7", "0.45", "0.55", "1", 0, 1, 2),
]


def cov(row):
    return [mpf(row[0]), mpf(row[1]), mpf(row[2]), mpf(row[3]), mpf(row[4]), mpf(row[5])]


def mnl_util(x):
    v2 = MNL["asc_med"] + sum(b * xi for b, xi in zip(MNL["b_med"], x))
    v3 = sum(b * xi for b, xi in zip(MNL["b_high"], x))
    return [MNL["asc_low"], v2, v3]


def softmax(v):
    m = max(v)
    e = [exp(vi - m) for vi in v]
    s = sum(e)
    return [ei / s for ei in e]


def logistic(z):
    return 1 / (1 + exp(-z))


def ol_probs(u, mu1, mu2):
    f1, f2 = logistic(mu1 - u), logistic(mu2 - u)
    return [f1, f2 - f1, 1 - f2]


def show(name, vals):
    print(name, ", ".join(mp.nstr(v, 25) for v in vals))


one = [mpf(1), mpf(1), mpf(1), mpf(1), mpf(0), mpf(0)]
show("mnl utilities (1,1,1,1,0,0):", mnl_util(one))
show("softmax(700,0,-700):", softmax([mpf(700), mpf(0), mpf(-700)]))
show("ol index (1,1,1,1,0,0):", [sum(e * x for e, x in zip(ETA, one))])
show("ol probs U=1 mu=(0.5,2):", ol_probs(mpf(1), mpf("0.5"), mpf(2)))

ll = sum(log(softmax(mnl_util(cov(r)))[r[6] - 1]) for r in FRAME)
show("mnl ll 5-row:", [ll])
show("mnl probs 5-row:", [p for r in FRAME for p in softmax(mnl_util(cov(r)))])
ll_ol = sum(log(ol_probs(sum(e * x for e, x in zip(ETA, cov(r))), MU1, MU2)[r[6] - 1]) for r in FRAME)
show("ol ll 5-row:", [ll_ol])
show("p-value t=2:", [2 * (1 - ncdf(2))])
show("t for -9.86/2.12:", [mpf("-9.86") / mpf("2.12")])
show("mnl medium speed elasticity 5-row:",
     [(1 - softmax(mnl_util(cov(r)))[1]) * cov(r)[0] * MNL["b_med"][0] for r in FRAME])
show("mnl argmax 5-row:", [max(range(3), key=lambda j: softmax(mnl_util(cov(r)))[j]) + 1 for r in FRAME])
