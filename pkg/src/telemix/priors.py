"""Priors on the number of mixture components and on concentration parameters.

All component-count priors live on {1, 2, ...}: the shifted families are
parameterized so that K - 1 follows the textbook distribution on {0, 1, ...}.
Everything works in log space via gammaln/betaln.
"""

import numpy as np
from scipy.special import gammaln, betaln, logsumexp

# hard cap for truncated summations (tail bounds documented in tail_mass)
K_HARD_CAP = 100_000

_FAMILIES = ("bnb", "poisson", "negbin", "geometric", "uniform", "pointmass")


class ComponentCountPrior:
    """Prior p(K) on the number of components, supported on {1, 2, ...}.

    Families
    --------
    bnb(a_lam, a_pi, b_pi)
        K - 1 beta-negative-binomial. Heavy tailed; mean is finite only
        for a_pi > 1.
    poisson(lam)
        K - 1 Poisson(lam).
    negbin(a_lam, beta)
        K - 1 negative-binomial, the Gamma(a_lam, beta) mixture of
        Poissons, success odds beta/(beta+1).
    geometric(pi_)
        K - 1 geometric with success probability pi_.
    uniform(k_max)
        uniform on {1, ..., k_max}.
    pointmass(k_fix)
        degenerate at k_fix (the classical fixed-K mixture).
    """

    def __init__(self, family, params):
        if family not in _FAMILIES:
            raise ValueError("unknown component-count prior family: %r" % (family,))
        self.family = family
        self.params = tuple(float(p) for p in params)
        self._validate()

    # ---- constructors ----

    @classmethod
    def bnb(cls, a_lam, a_pi, b_pi):
        return cls("bnb", (a_lam, a_pi, b_pi))

    @classmethod
    def poisson(cls, lam):
        return cls("poisson", (lam,))

    @classmethod
    def negbin(cls, a_lam, beta):
        return cls("negbin", (a_lam, beta))

    @classmethod
    def geometric(cls, pi_):
        return cls("geometric", (pi_,))

    @classmethod
    def uniform(cls, k_max):
        return cls("uniform", (int(k_max),))

    @classmethod
    def pointmass(cls, k_fix):
        return cls("pointmass", (int(k_fix),))

    def _validate(self):
        p = self.params
        if self.family == "bnb":
            if len(p) != 3 or min(p) <= 0:
                raise ValueError("bnb prior needs a_lam, a_pi, b_pi > 0")
        elif self.family == "poisson":
            if len(p) != 1 or p[0] <= 0:
                raise ValueError("poisson prior needs lam > 0")
        elif self.family == "negbin":
            if len(p) != 2 or min(p) <= 0:
                raise ValueError("negbin prior needs a_lam, beta > 0")
        elif self.family == "geometric":
            if len(p) != 1 or not 0 < p[0] <= 1:
                raise ValueError("geometric prior needs 0 < pi <= 1")
        elif self.family == "uniform":
            if len(p) != 1 or p[0] < 1 or p[0] != int(p[0]):
                raise ValueError("uniform prior needs integer k_max >= 1")
        elif self.family == "pointmass":
            if len(p) != 1 or p[0] < 1 or p[0] != int(p[0]):
                raise ValueError("pointmass prior needs integer k_fix >= 1")

    # ---- pmf etc. ----

    def log_pmf(self, k):
        """Log p(K = k). Vectorized; -inf outside the support."""
        k = np.asarray(k, dtype=float)
        out = np.full(k.shape, -np.inf)
        ok = (k >= 1) & (k == np.floor(k))
        if self.family == "uniform":
            k_max = self.params[0]
            ok &= k <= k_max
            out[ok] = -np.log(k_max)
        elif self.family == "pointmass":
            ok &= k == self.params[0]
            out[ok] = 0.0
        elif self.family == "poisson":
            lam = self.params[0]
            kk = k[ok]
            out[ok] = (kk - 1.0) * np.log(lam) - lam - gammaln(kk)
        elif self.family == "geometric":
            pi_ = self.params[0]
            kk = k[ok]
            out[ok] = np.log(pi_) + (kk - 1.0) * np.log1p(-pi_)
        elif self.family == "negbin":
            a, b = self.params
            kk = k[ok]
            out[ok] = (gammaln(a + kk - 1.0) - gammaln(a) - gammaln(kk)
                       + a * np.log(b / (b + 1.0)) - (kk - 1.0) * np.log1p(b))
        elif self.family == "bnb":
            a_lam, a_pi, b_pi = self.params
            kk = k[ok]
            out[ok] = (gammaln(a_lam + kk - 1.0) - gammaln(a_lam) - gammaln(kk)
                       + betaln(a_lam + a_pi, kk - 1.0 + b_pi)
                       - betaln(a_pi, b_pi))
        if out.ndim == 0:
            return float(out)
        return out

    def mean(self):
        """E[K]; may be inf (bnb with a_pi <= 1)."""
        p = self.params
        if self.family == "bnb":
            a_lam, a_pi, b_pi = p
            return 1.0 + a_lam * b_pi / (a_pi - 1.0) if a_pi > 1.0 else np.inf
        if self.family == "poisson":
            return 1.0 + p[0]
        if self.family == "negbin":
            return 1.0 + p[0] / p[1]
        if self.family == "geometric":
            return 1.0 / p[0]
        if self.family == "uniform":
            return (1.0 + p[0]) / 2.0
        return p[0]  # pointmass

    def tail_mass(self, k):
        """P(K > k).

        Closed form where trivial, otherwise truncated summation up to
        min(k, K_HARD_CAP); past the cap the neglected mass is below the
        cap's own tail, which every supported family has < 1e-12 well
        before 1e5 except bnb with very small a_pi, and the residual is
        reported by the caller via this same function.
        """
        k = int(k)
        if k < 1:
            return 1.0
        if self.family == "uniform":
            k_max = int(self.params[0])
            return 0.0 if k >= k_max else (k_max - k) / k_max
        if self.family == "pointmass":
            return 0.0 if k >= self.params[0] else 1.0
        if self.family == "geometric":
            return (1.0 - self.params[0]) ** k
        grid = np.arange(1, min(k, K_HARD_CAP) + 1, dtype=float)
        return float(max(0.0, -np.expm1(logsumexp(self.log_pmf(grid)))))

    def support_max(self):
        """Largest supported K, or None for unbounded families."""
        if self.family in ("uniform", "pointmass"):
            return int(self.params[0])
        return None

    def describe(self):
        return {"family": self.family, "params": list(self.params)}

    def __repr__(self):
        return "ComponentCountPrior(%s%r)" % (self.family, self.params)

    def __eq__(self, other):
        return (isinstance(other, ComponentCountPrior)
                and self.family == other.family and self.params == other.params)


class Hyperprior:
    """Prior density for a concentration parameter (alpha or gamma).

    kind "f": F distribution with (nu_l, nu_r) degrees of freedom,
    mode (nu_l-2)/nu_l * nu_r/(nu_r+2) for nu_l > 2.
    kind "gamma": Gamma(a, b) in shape/rate form.
    """

    def __init__(self, kind, params):
        if kind not in ("f", "gamma"):
            raise ValueError("hyperprior kind must be 'f' or 'gamma'")
        self.kind = kind
        self.params = tuple(float(p) for p in params)
        if len(self.params) != 2 or min(self.params) <= 0:
            raise ValueError("hyperprior needs two positive parameters")

    @classmethod
    def f(cls, nu_l, nu_r):
        return cls("f", (nu_l, nu_r))

    @classmethod
    def gamma(cls, a, b):
        return cls("gamma", (a, b))

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, -np.inf)
        pos = x > 0
        xp = x[pos]
        if self.kind == "f":
            nl, nr = self.params
            h = 0.5 * nl
            g = 0.5 * nr
            out[pos] = (h * np.log(nl / nr) - betaln(h, g)
                        + (h - 1.0) * np.log(xp)
                        - (h + g) * np.log1p(nl / nr * xp))
        else:
            a, b = self.params
            out[pos] = a * np.log(b) - gammaln(a) + (a - 1.0) * np.log(xp) - b * xp
        if out.ndim == 0:
            return float(out)
        return out

    def sample(self, rng):
        if self.kind == "f":
            # ratio of two gamma draws, each scaled by its degrees of freedom
            nl, nr = self.params
            num = rng.gamma(shape=0.5 * nl, scale=2.0) / nl
            den = rng.gamma(shape=0.5 * nr, scale=2.0) / nr
            return num / den
        a, b = self.params
        return rng.gamma(shape=a, scale=1.0 / b)

    def mean(self):
        if self.kind == "f":
            nr = self.params[1]
            return nr / (nr - 2.0) if nr > 2.0 else np.inf
        a, b = self.params
        return a / b

    def initial_value(self):
        """Deterministic chain start: the mean when finite, else 1."""
        m = self.mean()
        return float(m) if np.isfinite(m) else 1.0

    def describe(self):
        return {"kind": self.kind, "params": list(self.params)}

    def __repr__(self):
        return "Hyperprior(%s%r)" % (self.kind, self.params)


class ConcentrationSpec:
    """How the Dirichlet parameter gamma_K is tied to K.

    mode "static":  gamma_K = gamma for every K.
    mode "dynamic": gamma_K = alpha / K.
    The concentration itself (gamma resp. alpha) is either fixed or given
    a Hyperprior and sampled.
    """

    def __init__(self, mode, value=None, hyperprior=None):
        if mode not in ("static", "dynamic"):
            raise ValueError("concentration mode must be 'static' or 'dynamic'")
        if (value is None) == (hyperprior is None):
            raise ValueError("give exactly one of a fixed value or a hyperprior")
        if value is not None and value <= 0:
            raise ValueError("concentration must be positive")
        self.mode = mode
        self.value = None if value is None else float(value)
        self.hyperprior = hyperprior

    @classmethod
    def static_fixed(cls, gamma):
        return cls("static", value=gamma)

    @classmethod
    def static_prior(cls, hyperprior):
        return cls("static", hyperprior=hyperprior)

    @classmethod
    def dynamic_fixed(cls, alpha):
        return cls("dynamic", value=alpha)

    @classmethod
    def dynamic_prior(cls, hyperprior):
        return cls("dynamic", hyperprior=hyperprior)

    @property
    def is_fixed(self):
        return self.hyperprior is None

    def gamma_for(self, k_components, value=None):
        """gamma_K for a given K: gamma (static) or alpha/K (dynamic).
        Vectorized over k_components."""
        v = self.value if value is None else value
        if v is None:
            raise ValueError("spec has a hyperprior; pass the current value")
        k = np.asarray(k_components, dtype=float)
        out = np.full(k.shape, float(v)) if self.mode == "static" else float(v) / k
        if out.ndim == 0:
            return float(out)
        return out

    def log_density(self, x):
        if self.hyperprior is None:
            raise ValueError("fixed concentration has no density to evaluate")
        return self.hyperprior.log_density(x)

    def initial_value(self):
        if self.is_fixed:
            return self.value
        return self.hyperprior.initial_value()

    def describe(self):
        d = {"mode": self.mode}
        if self.is_fixed:
            d["value"] = self.value
        else:
            d["hyperprior"] = self.hyperprior.describe()
        return d

    def __repr__(self):
        inner = ("value=%r" % (self.value,) if self.is_fixed
                 else "hyperprior=%r" % (self.hyperprior,))
        return "ConcentrationSpec(%r, %s)" % (self.mode, inner)
