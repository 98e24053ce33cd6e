"""Per-ES CPU-frequency and bandwidth allocation (P1).

For one edge server with clients n = 1..m, minimise

    E_k = tau * sum_n [ (alpha/2) X_n nu_n^2 + p_n t_com(B_n) ]

subject to X_n/nu_n + t_com(B_n) <= t0, nu_min <= nu_n <= nu_max and
sum B_n <= B0, where X_n = lambda_n C D_n and
t_com(B) = z / (B log2(1 + h p / (B N0))).

``solve_p1`` runs the alternating-optimisation loop: every client starts
slack at nu_min; given the current binding set the KKT system is solved by
a bisection on the bandwidth price mu (sum B(mu) = B0); slack clients whose
latency is then violated join the binding set and the system is re-solved.
The binding set only grows, so at most m + 1 passes are needed.

Every 1-D map used below is strictly monotone, so bracketing root finders
(Brent's method in log coordinates) always converge:

* slack client:   tau p * price(B) = mu,          price decreasing in B
* binding client: tau (p + alpha nu(B)^3) price(B) = mu along the latency
  curve nu(B) = X / (t0 - t_com(B)), both factors decreasing in B

where price(B) = -d t_com / dB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .errors import InfeasibleError, NumericalError, OracleSizeError

LN2 = math.log(2.0)
_XTOL = 1e-13  # in log coordinates, i.e. relative
_MAXITER = 200


@dataclass(frozen=True)
class P1Instance:
    cycles: np.ndarray  # X_n = lambda_n C D_n
    gains: np.ndarray  # h_{n,k}
    powers: np.ndarray  # p_n, W
    bandwidth: float = 10e6  # B0, Hz
    noise_psd: float = 4e-21  # N0, W/Hz
    deadline: float = 0.2  # t0, s
    tau: int = 1
    capacitance: float = 2e-28
    nu_min: float = 1e9
    nu_max: float = 10e9
    model_bits: float = 1e5
    client_ids: tuple = ()

    def __post_init__(self):
        for name in ("cycles", "gains", "powers"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        m = self.cycles.size
        if m == 0 or self.gains.size != m or self.powers.size != m:
            raise ValueError("need at least one client and matching per-client arrays")
        if not self.client_ids:
            object.__setattr__(self, "client_ids", tuple(range(m)))
        if len(self.client_ids) != m:
            raise ValueError("client_ids length mismatch")
        if np.any(self.cycles <= 0) or np.any(self.gains <= 0) or np.any(self.powers <= 0):
            raise ValueError("cycles, gains and powers must be positive")
        if min(self.bandwidth, self.noise_psd, self.deadline, self.capacitance, self.model_bits) <= 0:
            raise ValueError("scalar parameters must be positive")
        if not 0 < self.nu_min <= self.nu_max:
            raise ValueError("need 0 < nu_min <= nu_max")

    @property
    def m(self) -> int:
        return self.cycles.size

    @property
    def snr_scale(self) -> np.ndarray:
        """a_n = h_n p_n / N0 (Hz); the SNR at bandwidth B is a_n / B."""
        return self.gains * self.powers / self.noise_psd

    def subset(self, idx) -> "P1Instance":
        idx = list(idx)
        return P1Instance(
            self.cycles[idx], self.gains[idx], self.powers[idx], self.bandwidth, self.noise_psd,
            self.deadline, self.tau, self.capacitance, self.nu_min, self.nu_max, self.model_bits,
            tuple(self.client_ids[i] for i in idx),
        )


@dataclass(frozen=True)
class AllocationSolution:
    client_ids: tuple
    nu: np.ndarray
    bandwidth: np.ndarray
    binding: np.ndarray
    mu: float
    theta: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray
    energy: float
    kkt_residual: float = float("nan")
    iterations: int = 0
    t_cmp: np.ndarray = field(default=None, repr=False)
    t_com: np.ndarray = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "clients": list(self.client_ids),
            "nu": self.nu.tolist(),
            "bandwidth": self.bandwidth.tolist(),
            "binding": self.binding.tolist(),
            "mu": self.mu,
            "energy": self.energy,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
        }


# --- scalar link physics ---------------------------------------------------

def rate(B: float, a: float) -> float:
    return B * math.log1p(a / B) / LN2


def comm_time(B: float, a: float, z: float) -> float:
    return z / rate(B, a)


def comm_time_floor(a: float, z: float) -> float:
    """lim_{B->inf} t_com(B) = z ln2 / a."""
    return z * LN2 / a


def _phi(u: float) -> float:
    # ln(1+u) - u/(1+u), positive for u > 0; series avoids cancellation
    if u < 1e-4:
        return u * u * (0.5 - u * (2.0 / 3.0 - 0.75 * u))
    return math.log1p(u) - u / (1.0 + u)


def price(B: float, a: float, z: float) -> float:
    """-d t_com / dB (s/Hz), strictly decreasing in B."""
    u = a / B
    r = B * math.log1p(u)
    return z * LN2 * _phi(u) / (r * r)


def _log_root(g, x0: float, x1: float, what: str) -> float:
    """Root of ``g`` (decreasing in x) on (0, inf), searched in log x."""
    lo, hi = math.log(x0), math.log(x1)
    step = math.log(10.0)
    for _ in range(80):
        if g(math.exp(lo)) > 0:
            break
        lo -= step
    else:
        raise NumericalError(f"{what}: no lower bracket")
    for _ in range(80):
        if g(math.exp(hi)) < 0:
            break
        hi += step
    else:
        raise NumericalError(f"{what}: no upper bracket")
    try:
        y = brentq(lambda s: g(math.exp(s)), lo, hi, xtol=_XTOL, maxiter=_MAXITER)
    except RuntimeError as exc:  # pragma: no cover - monotone maps always converge
        raise NumericalError(f"{what}: {exc}") from exc
    return math.exp(y)


def bandwidth_for_time(t_com: float, a: float, z: float, scale: float = 1e6) -> float:
    """Smallest B with comm_time(B) <= t_com; ``inf`` if unreachable."""
    if t_com <= comm_time_floor(a, z):
        return math.inf
    target = z / t_com
    return _log_root(lambda B: target - rate(B, a), scale, scale, "bandwidth_for_time")


def slack_bandwidth(mu: float, weight: float, a: float, z: float, scale: float = 1e6) -> float:
    """B solving weight * price(B) = mu (weight = tau p for a slack client)."""
    return _log_root(lambda B: weight * price(B, a, z) - mu, scale, scale, "slack_bandwidth")


# --- per-client curve data ----------------------------------------------------

@dataclass
class _Client:
    X: float
    a: float
    p: float
    b_min: float  # bandwidth on the latency curve at nu_max
    b_at_min: float  # bandwidth on the latency curve at nu_min (inf if unreachable)


def _prepare(inst: P1Instance) -> list:
    out = []
    z, t0 = inst.model_bits, inst.deadline
    for n in range(inst.m):
        X, a, p = inst.cycles[n], inst.snr_scale[n], inst.powers[n]
        slack_time = t0 - X / inst.nu_max
        b_min = bandwidth_for_time(slack_time, a, z, inst.bandwidth) if slack_time > 0 else math.inf
        if not b_min <= inst.bandwidth:
            raise InfeasibleError(
                f"client {inst.client_ids[n]!r} cannot meet t0={t0} even at nu_max with the full band",
                client=inst.client_ids[n],
            )
        b_at_min = bandwidth_for_time(t0 - X / inst.nu_min, a, z, inst.bandwidth) if t0 > X / inst.nu_min else math.inf
        out.append(_Client(X, a, p, b_min, b_at_min))
    total = sum(c.b_min for c in out)
    if total >= inst.bandwidth * (1 - 1e-12):
        worst = max(range(inst.m), key=lambda i: out[i].b_min)
        raise InfeasibleError(
            f"minimum bandwidth demand {total:.6g} Hz exceeds B0={inst.bandwidth:.6g} Hz",
            client=inst.client_ids[worst],
        )
    return out


def _nu_on_curve(B: float, c: _Client, inst: P1Instance) -> float:
    rem = inst.deadline - comm_time(B, c.a, inst.model_bits)
    return c.X / rem if rem > 0 else math.inf


def _binding_point(mu: float, c: _Client, inst: P1Instance):
    """(B, nu) for a client held on its latency curve at bandwidth price mu."""
    tau, alpha, z = inst.tau, inst.capacitance, inst.model_bits

    def lhs(B):
        nu = min(_nu_on_curve(B, c, inst), inst.nu_max)
        return tau * (c.p + alpha * nu**3) * price(B, c.a, z)

    if mu >= lhs(c.b_min):
        return c.b_min, inst.nu_max
    if math.isfinite(c.b_at_min) and mu <= lhs(c.b_at_min):
        return c.b_at_min, inst.nu_min

    def g(B):
        # guard the part of the curve that lies left of b_min
        if B <= c.b_min:
            return 1.0
        return lhs(B) - mu

    B = _log_root(g, c.b_min * (1 + 1e-12), max(c.b_min * 2, inst.bandwidth), "binding_point")
    if math.isfinite(c.b_at_min):
        B = min(B, c.b_at_min)
    return B, min(max(_nu_on_curve(B, c, inst), inst.nu_min), inst.nu_max)


def _allocate(mu: float, binding, clients, inst: P1Instance):
    B = np.empty(inst.m)
    nu = np.empty(inst.m)
    for n, c in enumerate(clients):
        if binding[n]:
            B[n], nu[n] = _binding_point(mu, c, inst)
        else:
            B[n] = slack_bandwidth(mu, inst.tau * c.p, c.a, inst.model_bits, inst.bandwidth)
            nu[n] = inst.nu_min
    return B, nu


def _solve_price(binding, clients, inst: P1Instance):
    """Find mu with sum_n B_n(mu) = B0 for a fixed slack/binding split."""
    B0 = inst.bandwidth

    def excess(mu):
        B, _ = _allocate(mu, binding, clients, inst)
        return math.fsum(B) / B0 - 1.0

    # sensible starting point: slack price at an equal split
    mu0 = max(inst.tau * c.p * price(B0 / inst.m, c.a, inst.model_bits) for c in clients)
    mu = _log_root(excess, mu0, mu0, "bandwidth price")
    B, nu = _allocate(mu, binding, clients, inst)
    # remove the last rounding drift so sum B == B0
    B *= B0 / math.fsum(B)
    return mu, B, nu


def latency_slack(inst: P1Instance, nu, B) -> np.ndarray:
    """Gamma_n = X_n / nu_n + t_com(B_n) - t0."""
    z = inst.model_bits
    tc = np.array([comm_time(b, a, z) for b, a in zip(B, inst.snr_scale)])
    return inst.cycles / np.asarray(nu) + tc - inst.deadline


def p1_objective(inst: P1Instance, nu, B) -> float:
    nu = np.asarray(nu, dtype=float)
    z = inst.model_bits
    tc = np.array([comm_time(b, a, z) for b, a in zip(B, inst.snr_scale)])
    return float(inst.tau * np.sum(0.5 * inst.capacitance * inst.cycles * nu**2 + inst.powers * tc))


def _multipliers(inst: P1Instance, mu, nu, B, binding):
    tau, alpha, z = inst.tau, inst.capacitance, inst.model_bits
    m = inst.m
    theta, gamma, sigma = np.zeros(m), np.zeros(m), np.zeros(m)
    for n in range(m):
        X = inst.cycles[n]
        if binding[n]:
            theta[n] = max(mu / price(B[n], inst.snr_scale[n], z) - tau * inst.powers[n], 0.0)
            s = theta[n] * X / nu[n] ** 2 - tau * alpha * X * nu[n]
            if nu[n] >= inst.nu_max * (1 - 1e-12) and s > 0:
                sigma[n] = s
            elif nu[n] <= inst.nu_min * (1 + 1e-12) and s < 0:
                gamma[n] = -s
        else:
            gamma[n] = tau * alpha * X * nu[n]
    return theta, gamma, sigma


def _finish(inst, mu, nu, B, binding, theta, gamma, sigma, iterations) -> AllocationSolution:
    z = inst.model_bits
    tc = np.array([comm_time(b, a, z) for b, a in zip(B, inst.snr_scale)])
    sol = AllocationSolution(
        client_ids=inst.client_ids,
        nu=nu,
        bandwidth=B,
        binding=np.asarray(binding, dtype=bool),
        mu=float(mu),
        theta=theta,
        gamma=gamma,
        sigma=sigma,
        energy=p1_objective(inst, nu, B),
        iterations=iterations,
        t_cmp=inst.cycles / nu,
        t_com=tc,
    )
    return replace(sol, kkt_residual=kkt_residual(inst, sol))


def check_feasible(inst: P1Instance) -> None:
    """Raise InfeasibleError unless every client fits and the band suffices at nu_max."""
    _prepare(inst)


def solve_p1(inst: P1Instance, tol: float = 1e-10) -> AllocationSolution:
    """Optimal (nu, B) for one ES by alternating optimisation over the binding set."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    clients = _prepare(inst)
    binding = np.zeros(inst.m, dtype=bool)
    for it in range(1, inst.m + 2):
        mu, B, nu = _solve_price(binding, clients, inst)
        gam = latency_slack(inst, nu, B)
        newly = ~binding & (gam >= 0)
        if not newly.any():
            theta, gamma, sigma = _multipliers(inst, mu, nu, B, binding)
            return _finish(inst, mu, nu, B, binding, theta, gamma, sigma, it)
        binding |= newly
    raise NumericalError("alternating optimisation did not settle within m + 1 passes")  # pragma: no cover


def kkt_residual(inst: P1Instance, sol: AllocationSolution) -> float:
    """Largest normalised violation of stationarity, complementary slackness and feasibility."""
    tau, alpha, z = inst.tau, inst.capacitance, inst.model_bits
    X, a, p = inst.cycles, inst.snr_scale, inst.powers
    nu, B = np.asarray(sol.nu, float), np.asarray(sol.bandwidth, float)
    theta, gamma, sigma, mu = sol.theta, sol.gamma, sol.sigma, sol.mu
    if np.any(B <= 0):
        raise ValueError("bandwidths must be positive")
    res = []
    # stationarity in nu
    terms = np.array([tau * alpha * X * nu, gamma, sigma, theta * X / nu**2])
    stat_nu = tau * alpha * X * nu - gamma + sigma - theta * X / nu**2
    res.append(np.abs(stat_nu) / terms.sum(axis=0))
    # stationarity in B: every client implies the same mu
    pr = np.array([price(b, aa, z) for b, aa in zip(B, a)])
    implied = (tau * p + theta) * pr
    scale = max(abs(mu), implied.max())
    res.append(np.abs(implied - mu) / scale)
    res.append([abs(B.sum() - inst.bandwidth) / inst.bandwidth])
    # complementary slackness
    gam = latency_slack(inst, nu, B)
    th_scale = theta + tau * alpha * nu**3
    res.append(theta * np.abs(gam) / (th_scale * inst.deadline))
    nu_scale = tau * alpha * X * nu
    res.append(gamma * np.abs(nu - inst.nu_min) / ((gamma + nu_scale) * inst.nu_min))
    res.append(sigma * np.abs(nu - inst.nu_max) / ((sigma + nu_scale) * inst.nu_max))
    # primal and dual feasibility
    res.append(np.maximum(gam, 0) / inst.deadline)
    res.append(np.maximum(inst.nu_min - nu, 0) / inst.nu_min)
    res.append(np.maximum(nu - inst.nu_max, 0) / inst.nu_max)
    res.append(np.maximum(-theta, 0) / th_scale)
    res.append(np.maximum(-gamma, 0) / nu_scale)
    res.append(np.maximum(-sigma, 0) / nu_scale)
    res.append([0.0 if mu > 0 else 1.0])
    return float(max(np.max(np.asarray(r, dtype=float)) for r in res))


# --- helpers exposed for property checks ----------------------------------------

def bandwidth_given_frequencies(inst: P1Instance, nu) -> tuple:
    """Split B0 for fixed frequencies with theta_n = tau alpha nu_n^3.

    Returns ``(mu, B)`` with tau (p_n + alpha nu_n^3) price(B_n) = mu and sum B = B0.
    """
    nu = np.asarray(nu, dtype=float)
    w = inst.tau * (inst.powers + inst.capacitance * nu**3)
    a, z, B0 = inst.snr_scale, inst.model_bits, inst.bandwidth

    def split(mu):
        return np.array([slack_bandwidth(mu, w[n], a[n], z, B0) for n in range(inst.m)])

    mu0 = max(w[n] * price(B0 / inst.m, a[n], z) for n in range(inst.m))
    mu = _log_root(lambda m_: split(m_).sum() / B0 - 1.0, mu0, mu0, "bandwidth_given_frequencies")
    B = split(mu)
    return mu, B * (B0 / B.sum())


# --- brute-force oracle -----------------------------------------------------------

def grid_oracle_p1(inst: P1Instance, grid_resolution: int = 400) -> AllocationSolution:
    """Best feasible point on a (nu, B) grid, exhaustive over the bandwidth simplex.

    nu takes ``grid_resolution + 1`` evenly spaced values in [nu_min, nu_max];
    B_n takes multiples of B0 / grid_resolution with sum B_n <= B0. The
    search over simplex points is done exactly by a min-plus recursion over
    clients, which visits every composition implicitly.
    """
    m, g = inst.m, int(grid_resolution)
    if m > 4:
        raise OracleSizeError("grid oracle supports at most 4 clients")
    if g < m:
        raise ValueError("grid too coarse for the client count")
    nus = np.linspace(inst.nu_min, inst.nu_max, g + 1)
    steps = np.arange(1, g + 1)
    Bs = steps * inst.bandwidth / g
    a, z, t0, tau = inst.snr_scale, inst.model_bits, inst.deadline, inst.tau
    inf = math.inf
    best_e = np.full((m, g + 1), inf)  # index by number of bandwidth units
    best_nu = np.zeros((m, g + 1))
    for n in range(m):
        tc = z / (Bs * np.log1p(a[n] / Bs) / LN2)
        e = tau * (0.5 * inst.capacitance * inst.cycles[n] * nus[None, :] ** 2 + inst.powers[n] * tc[:, None])
        ok = inst.cycles[n] / nus[None, :] + tc[:, None] <= t0
        e = np.where(ok, e, inf)
        i = np.argmin(e, axis=1)
        best_e[n, 1:] = e[np.arange(g), i]
        best_nu[n, 1:] = nus[i]
    # min-plus recursion: acc[s] = best total using at most s units over clients so far
    acc = np.zeros(g + 1)
    choice = np.zeros((m, g + 1), dtype=np.int64)
    for n in range(m):
        new = np.full(g + 1, inf)
        arg = np.zeros(g + 1, dtype=np.int64)
        for j in range(1, g + 1):
            cand = np.full(g + 1, inf)
            cand[j:] = acc[: g + 1 - j] + best_e[n, j]
            better = cand < new
            new[better] = cand[better]
            arg[better] = j
        acc, choice[n] = new, arg
    if not math.isfinite(acc[g]):
        raise InfeasibleError("no feasible grid point")
    units = np.zeros(m, dtype=np.int64)
    s = g
    for n in reversed(range(m)):
        units[n] = choice[n, s]
        s -= units[n]
    B = units * inst.bandwidth / g
    nu = best_nu[np.arange(m), units]
    gam = latency_slack(inst, nu, B)
    zeros = np.zeros(m)
    return AllocationSolution(
        client_ids=inst.client_ids, nu=nu, bandwidth=B, binding=gam >= -1e-9 * t0, mu=float("nan"),
        theta=zeros, gamma=zeros, sigma=zeros, energy=p1_objective(inst, nu, B),
    )


def random_p1_instance(rng: np.random.Generator, m: int, model_bits: float = 2e5,
                       deadline: float = 0.2, max_tries: int = 1000) -> P1Instance:
    """A feasible random instance mixing deadline-bound and slack clients.

    Compute loads span 0.2 to 1.5 times what nu_min finishes within t0, so
    some clients must speed up and some need not.
    """
    for _ in range(max_tries):
        d = rng.uniform(30.0, 800.0, size=m)
        f = rng.uniform(1.0, 4.0, size=m)
        pl = 32.4 + 20 * np.log10(f) + 30 * np.log10(d)
        inst = P1Instance(
            cycles=rng.uniform(0.2, 1.5, size=m) * deadline * 1e9,
            gains=10.0 ** (-pl / 10.0),
            powers=rng.uniform(0.1, 1.0, size=m),
            deadline=deadline,
            model_bits=model_bits,
        )
        try:
            check_feasible(inst)
        except InfeasibleError:
            continue
        return inst
    raise NumericalError("could not draw a feasible instance")  # pragma: no cover
