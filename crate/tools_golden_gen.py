"""Generate 50-digit reference values for the thresholds golden file and test literals."""
import mpmath as mp

mp.mp.dps = 50


def H(a):
    a = mp.mpf(a)
    return -a * mp.log(a) - (1 - a) * mp.log(1 - a)


def log_binom(p, s):
    return mp.loggamma(p + 1) - mp.loggamma(s + 1) - mp.loggamma(p - s + 1)


def n_star_sublinear(p, s, d, sigma, delta):
    num = 2 * s * mp.log(mp.mpf(p) / s)
    den = mp.log(mp.mpf(d) * s / p) + mp.log(mp.mpf(delta) / (2 * mp.mpf(sigma) ** 2))
    return num / den


def n_star_linear(p, alpha, d, sigma, delta):
    num = 2 * H(alpha) * p
    den = mp.log(d) + mp.log(mp.mpf(delta) * mp.mpf(alpha) / (2 * mp.mpf(sigma) ** 2))
    return num / den


def n_inf_sp_sublinear(p, s, d):
    return 2 * s * mp.log(mp.mpf(p) / s) / mp.log(mp.mpf(d) * s / p)


def n_inf_sp_linear(p, alpha, d):
    return 2 * H(alpha) * p / mp.log(d)


def n_inf_dense(p, s):
    s = mp.mpf(s)
    return 2 * s * mp.log(mp.mpf(p) / s) / mp.log(s)


def n_alg_dense(p, s):
    return 2 * mp.mpf(s) * mp.log(mp.mpf(p) - s)


def n_star_sparsified(p, alpha, psi, delta):
    delta, psi = mp.mpf(delta), mp.mpf(psi)
    den = mp.log(1 + delta * psi**2 / ((1 - psi) * (2 - delta * (1 - psi))))
    return 2 * H(alpha) * p / den


def n_inf_sparsified_strong(p, alpha, psi, delta):
    delta, psi = mp.mpf(delta), mp.mpf(psi)
    return 2 * (2 - delta) * H(alpha) * p / (delta * psi**2)


def price_of_sparsity(p, s, d):
    return mp.log(s) / mp.log(mp.mpf(d) * s / p)


def power_law_gamma(a, b):
    a, b = mp.mpf(a), mp.mpf(b)
    return a / (a + b - 1)


def wang_necessary(p, s, d, sigma):
    lam2 = (mp.mpf(d) / p) / mp.mpf(sigma) ** 2
    return (log_binom(p, s) - 1) / (mp.mpf("0.5") * mp.log(1 + s * lam2))


def price_of_sparsification(p, alpha, psi, delta):
    s_real = mp.mpf(alpha) * p
    return n_inf_sparsified_strong(p, alpha, psi, delta) / n_inf_dense(p, s_real)


def sparsification_budget(p, n, alpha, delta):
    delta = mp.mpf(delta)
    return mp.sqrt(2 * (2 - delta) * H(alpha) * p / (delta * mp.mpf(n)))


def f(x):
    return mp.nstr(x, 22)


rows = [
    ("n_inf_dense", 1000000, 1000, "", "", "", n_inf_dense(1000000, 1000)),
    ("n_inf_dense", 50000, 1200, "", "", "", n_inf_dense(50000, 1200)),
    ("n_inf_sp_sublinear", 1000000, 1000, 10000, "", "", n_inf_sp_sublinear(1000000, 1000, 10000)),
    ("n_inf_sp_sublinear", 100000, 500, 3000, "", "", n_inf_sp_sublinear(100000, 500, 3000)),
    ("n_star_sublinear", 1000, 10, 200, 0.5, 0.5, n_star_sublinear(1000, 10, 200, "0.5", "0.5")),
    ("n_star_sublinear", 50000, 100, 2000, 0.7, 0.3, n_star_sublinear(50000, 100, 2000, "0.7", "0.3")),
    ("n_star_linear", 10000, 0.1, 500, 0.5, 0.5, n_star_linear(10000, "0.1", 500, "0.5", "0.5")),
    ("n_star_linear", 2000, 0.25, 100, 1.0, 0.8, n_star_linear(2000, "0.25", 100, "1.0", "0.8")),
    ("n_inf_sp_linear", 10000, 0.2, 100, "", "", n_inf_sp_linear(10000, "0.2", 100)),
    ("n_inf_sp_linear", 500, 0.4, 20, "", "", n_inf_sp_linear(500, "0.4", 20)),
    ("n_alg_dense", 1000, 10, "", "", "", n_alg_dense(1000, 10)),
    ("n_alg_dense", 10000, 250, "", "", "", n_alg_dense(10000, 250)),
    ("n_star_sparsified", 20, 0.2, 0.5, "", 0.5, n_star_sparsified(20, "0.2", "0.5", "0.5")),
    ("n_star_sparsified", 1000, 0.3, 0.1, "", 0.4, n_star_sparsified(1000, "0.3", "0.1", "0.4")),
    ("n_inf_sparsified_strong", 100, 0.2, 0.5, "", 0.5, n_inf_sparsified_strong(100, "0.2", "0.5", "0.5")),
    ("n_inf_sparsified_strong", 1000000, 0.2, 0.1, "", 0.5, n_inf_sparsified_strong(1000000, "0.2", "0.1", "0.5")),
    ("price_of_sparsity", 1000000, 1000, 10000, "", "", price_of_sparsity(1000000, 1000, 10000)),
    ("power_law_gamma", "", 0.5, 0.75, "", "", power_law_gamma("0.5", "0.75")),
    ("wang_necessary", 1000, 10, 200, 1.0, "", wang_necessary(1000, 10, 200, "1.0")),
    ("price_of_sparsification", 1000000, 0.2, 0.1, "", 0.5, price_of_sparsification(1000000, "0.2", "0.1", "0.5")),
]

print("kind,p,s_or_alpha,d_or_psi,sigma,delta,expected,rel_tol")
for kind, p, s, d, sg, dl, v in rows:
    print(f"{kind},{p},{s},{d},{sg},{dl},{f(v)},1e-10")

print()
print("== unit literals ==")
print("entropy(0.2)           =", f(H("0.2")))
print("entropy(0.3)           =", f(H("0.3")))
print("H(0.5)=ln2             =", f(H("0.5")))
print("log_binom(4,2)         =", f(log_binom(4, 2)))
print("log_binom(1000,10)     =", f(log_binom(1000, 10)))
print("n*slin(1000,10,200)    =", f(n_star_sublinear(1000, 10, 200, "0.5", "0.5")))
print("n*spfd(20,.2,.5,.5)    =", f(n_star_sparsified(20, "0.2", "0.5", "0.5")))
print("wang(1000,10,200,1)    =", f(wang_necessary(1000, 10, 200, "1.0")))
print("price_spfc(1e6)        =", f(price_of_sparsification(1000000, "0.2", "0.1", "0.5")))
print("cbe(2,.5,.5)           =", f(sum(mp.binomial(2, k) * mp.mpf("0.5") ** 2 * 1 / mp.sqrt(1 + k) for k in range(3))))
print("cbe(6,.5,.5)           =", f(sum(mp.binomial(6, k) * mp.mpf("0.5") ** 6 * 1 / mp.sqrt(1 + k) for k in range(7))))
print("2/sqrt(3)              =", f(2 / mp.sqrt(3)))
print("mgf(1/rt2,1/rt2,-1/2)  =", f(1 / (mp.mpf("0.5") * mp.sqrt(mp.mpf("2.5") ** 2 - 1))))
print("c_star(1,0.5)          =", f(mp.mpf("0.5") / (mp.mpf("0.5") * mp.mpf("1.5"))))
print("c_star(0.5,0.5)        =", f(mp.mpf("0.5") / (mp.mpf("0.5") * (2 - mp.mpf("0.5") * mp.mpf("0.5")))))
cs = mp.mpf("0.5") / (mp.mpf("0.5") * (2 - mp.mpf("0.5") * mp.mpf("0.5")))
print("h_limit(.5,.5)         =", f(mp.sqrt(1 / (1 + mp.mpf("0.5") * mp.mpf("0.5") * cs))))
print("n_dense(1e4,3000)      =", f(n_inf_dense(10000, 3000)))
print("n_sparse lin(1e4,.3,100)=", f(n_inf_sp_linear(10000, "0.3", 100)))
print("nstar7(30,5,18,.5,.4)  =", f(n_star_sublinear(30, 5, 18, "0.5", "0.4")))
print("4sig band mean nnz     =", f(4 * mp.sqrt(200000 * mp.mpf("0.1") * mp.mpf("0.9")) / 2000))
print("budget(100,4x,0.2,.5)  =", f(sparsification_budget(100, 4 * n_inf_sparsified_strong(100, "0.2", 1, "0.5"), "0.2", "0.5")))
