"""Command-line interface.

Subcommands
-----------
rates   rates of a two-qudit gate Hamiltonian read from a file
theta   entropy curve ``S(t)`` of one chain on a time grid
scan    the same over a grid of fields ``g`` and sizes ``N``
verify  cross-method and identity checks

Exit codes: 0 ok, 1 a verify check failed, 2 parse error, 3 validation
error, 4 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import fock, gaussian_fermions, micro_rates, obc_analytics, pbc_analytics
from . import replica_algebra, spin_oracle
from .errors import RootError, SizeError, ValidationError

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_VALIDATION, EXIT_CONFIG = 0, 1, 2, 3, 4

HEADER = ["method", "boundary", "N", "g", "t", "log_theta", "entropy", "valid"]
METHODS = ("auto", "dense", "product", "roots", "correlation", "asymptotic")
AUTO_DENSE_N = 10
# below this |log Theta| the double precision exact paths lose relative accuracy
RESOLVE_LIMIT = 1e-9
# the momentum product is trusted when |log Theta| exceeds its rounding
# estimate by this factor
PRODUCT_MARGIN = 1e8


class ParseError(ValueError):
    def __init__(self, line: int, msg: str):
        self.line = line
        super().__init__(f"line {line}: {msg}")


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % (x + 0.0)  # no negative zero
    return str(x)


# ---------------------------------------------------------------------------
# Hamiltonian files


def parse_hamiltonian(text: str) -> tuple[int, np.ndarray]:
    """Parse the plain-text Hamiltonian format.

    The first non-comment line holds ``d``; each of the following ``d^2``
    lines holds ``d^2`` entries written as ``re`` or ``re+imj``. Lines
    starting with ``#`` and blank lines are skipped.
    """
    rows = []
    d = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if d is None:
            try:
                d = int(line)
            except ValueError:
                raise ParseError(lineno, f"expected integer dimension, got {line!r}") from None
            if d < 2:
                raise ParseError(lineno, f"dimension must be at least 2, got {d}")
            continue
        if len(rows) == d * d:
            raise ParseError(lineno, f"more than {d * d} matrix rows")
        toks = line.split()
        if len(toks) != d * d:
            raise ParseError(lineno, f"expected {d * d} entries, got {len(toks)}")
        try:
            rows.append([complex(tok) for tok in toks])
        except ValueError:
            raise ParseError(lineno, f"bad numeric entry in {line!r}") from None
    if d is None:
        raise ParseError(0, "empty file")
    if len(rows) != d * d:
        raise ParseError(len(text.splitlines()), f"expected {d * d} matrix rows, got {len(rows)}")
    return d, np.array(rows)


def run_rates(args, out) -> int:
    try:
        with open(args.hamiltonian) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        d, M = parse_hamiltonian(text)
        H = micro_rates.QuditHamiltonian(d, M, real_only=args.real_only)
        r = micro_rates.coupling_rates(H, args.f)
        g = r.g if args.f is not None else None
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["d", "omega", "gamma", "tumbling", "f", "g"])
    w.writerow([d, fmt(r.omega), fmt(r.gamma), fmt(r.tumbling),
                "" if args.f is None else fmt(args.f), "" if g is None else fmt(g)])
    return EXIT_OK


# ---------------------------------------------------------------------------
# curves


@dataclass(frozen=True)
class CurveConfig:
    N: int
    g: float
    boundary: str
    times: tuple  # physical times
    gamma: float = 1.0
    method: str = "auto"
    variant: str = "double"


def time_grid(t_min, t_max, steps, spacing) -> np.ndarray:
    if steps < 1:
        raise ConfigError("t-steps must be at least 1")
    if t_min < 0 or t_max < t_min:
        raise ConfigError("need 0 <= t-min <= t-max")
    if spacing == "log":
        if t_min <= 0:
            raise ConfigError("log spacing needs t-min > 0")
        return np.geomspace(t_min, t_max, steps)
    return np.linspace(t_min, t_max, steps)


def check_config(cfg: CurveConfig) -> None:
    """Raise ConfigError for a method that cannot serve the chain."""
    if cfg.method not in METHODS:
        raise ConfigError(f"unknown method {cfg.method!r}")
    if cfg.boundary not in ("pbc", "obc"):
        raise ConfigError("boundary must be pbc or obc")
    if cfg.N < 2 or cfg.N % 2:
        raise ConfigError("N must be even and at least 2")
    if cfg.g < 0 or cfg.gamma <= 0:
        raise ConfigError("need g >= 0 and gamma > 0")
    m, b = cfg.method, cfg.boundary
    if m == "correlation" and b != "obc":
        raise ConfigError("method correlation requires --boundary obc")
    if m in ("product", "roots") and b != "pbc":
        raise ConfigError(f"method {m} requires --boundary pbc")
    if m == "dense" and cfg.N > spin_oracle.MAX_DENSE_N:
        raise ConfigError(f"method dense requires N <= {spin_oracle.MAX_DENSE_N}")
    if m == "asymptotic" and b == "obc" and not 0 < cfg.g < 1:
        raise ConfigError("no open-chain asymptotic form outside 0 < g < 1")
    if m == "asymptotic" and cfg.g == 0:
        raise ConfigError("no asymptotic form at g = 0")


def _entropy(lt: float) -> float:
    if lt > 0 or np.isnan(lt):
        return float("nan")
    return float(gaussian_fermions.entropy_from_log_theta(lt))


def _row(tag, lt):
    return tag, float(lt), _entropy(lt)


def _roots_row(N, g, tau):
    if tau == 0 or g == 0:
        return _row("roots", 0.0)
    lnl = pbc_analytics.exact_lnl(N, g, tau)
    # the entropy comes from log(-log Theta), which survives underflow of log Theta
    return "roots", -float(np.exp(lnl)), float(gaussian_fermions.entropy_from_lnl(lnl))


def exact_log_theta(method, boundary, N, g, taus) -> list[tuple[str, float, float]]:
    """``(method tag, log Theta, entropy)`` per dimensionless time ``tau``."""
    taus = np.asarray(taus, dtype=float)
    if method == "dense":
        spec = spin_oracle.ChainSpec(N, g, boundary=boundary)
        lt = np.minimum(spin_oracle.log_theta_dense(spec, taus), 0.0)
        return [_row("dense", v) for v in lt]
    if method == "product":
        return [_row("product", pbc_analytics.theta_product(N, g, tau)) for tau in taus]
    if method == "roots":
        return [_roots_row(N, g, tau) for tau in taus]
    if method == "correlation":
        spec = spin_oracle.ChainSpec(N, g, boundary="obc")
        lt = np.atleast_1d(gaussian_fermions.log_theta_correlation(spec, taus))
        return [_row("correlation", v) for v in lt]
    raise ConfigError(f"no exact path named {method!r}")


def product_rounding(N, g, tau) -> float:
    """Rough absolute rounding error of the double precision momentum product."""
    return 4 * np.finfo(float).eps * (N * (1 + g) * tau + N)


def _auto_log_theta(boundary, N, g, taus):
    if N <= AUTO_DENSE_N:
        return exact_log_theta("dense", boundary, N, g, taus)
    if boundary == "pbc":
        out = []
        for tau in taus:
            lt = pbc_analytics.theta_product(N, g, tau)
            if tau > 0 and g > 0 and not -lt > PRODUCT_MARGIN * product_rounding(N, g, tau):
                out.append(_roots_row(N, g, tau))
            else:
                out.append(_row("product", lt))
        return out
    out = exact_log_theta("correlation", boundary, N, g, taus)
    if 0 < g < 1:
        lo = 3 / (1 - g)
        for i, tau in enumerate(taus):
            # saturated bulk: the edge-mode product keeps full relative precision
            if abs(out[i][1]) < RESOLVE_LIMIT and tau >= lo:
                lt = obc_analytics.theta_exact_obc(N, g, tau).log_theta
                if lt < 0:
                    S = obc_analytics.entropy_exact_obc(N, g, tau)
                    out[i] = ("product", lt, S)
    return out


def asymptotic_log_theta(boundary, N, g, tau, variant="double"):
    """``(log Theta, entropy, valid)`` of the closed form for this regime, or None."""
    if g <= 0:
        return None
    if boundary == "obc":
        if not g < 1:
            return None
        a = obc_analytics.mixed_asymptote_obc(N, g, tau, variant)
        if not a.log_theta < 0:
            return a.log_theta, float("nan"), False
        return a.log_theta, a.entropy_from_theta, a.valid
    if g < 1:
        a = pbc_analytics.mixed_asymptote_pbc(N, g, tau)
        if not a.log_theta < 0:
            return a.log_theta, float("nan"), False
        return a.log_theta, gaussian_fermions.entropy_from_log_theta(a.log_theta), a.valid
    if g > 1:
        if tau <= 0:
            return None
        r = pbc_analytics.purifying_entropy(N, g, tau)
        if r.fallback:
            return None
        S = r.entropy
        valid = True
    else:
        if tau <= 0:
            return None
        early, inter, late, regime = pbc_analytics.critical_forms(N, tau)
        S = {"early": early, "intermediate": inter, "late": late}[regime]
        valid = regime != "intermediate" or tau >= 1
        if not S > 0:
            return None
    lt = float(gaussian_fermions.log_tanh(S / 2))
    if lt == 0:
        # Theta rounds to 1; keep the closed-form entropy itself
        return lt, float(S), valid
    return lt, float(gaussian_fermions.entropy_from_log_theta(lt)), valid


def curve_rows(cfg: CurveConfig) -> list[list]:
    """Rows of the entropy curve, sorted by ``t``; asymptotic rows follow the
    exact row at the same ``t``."""
    check_config(cfg)
    ts = np.asarray(cfg.times, dtype=float)
    taus = cfg.gamma * ts
    b, N, g = cfg.boundary, cfg.N, cfg.g
    rows = []
    if cfg.method != "asymptotic":
        if cfg.method == "auto":
            exact = _auto_log_theta(b, N, g, taus)
        else:
            exact = exact_log_theta(cfg.method, b, N, g, taus)
    for i, (t, tau) in enumerate(zip(ts, taus)):
        if cfg.method != "asymptotic":
            tag, lt, S = exact[i]
            rows.append([tag, b, N, g, float(t), lt, S, True])
        if cfg.method in ("auto", "asymptotic"):
            a = asymptotic_log_theta(b, N, g, tau, cfg.variant)
            if a is None:
                continue
            lt, S, valid = a
            if cfg.method == "auto" and not valid:
                continue
            rows.append(["asymptotic", b, N, g, float(t), lt, S, valid])
    return rows


def write_rows(rows, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow([fmt(v) for v in r])


def _curve_config(args, N, g) -> CurveConfig:
    times = tuple(time_grid(args.t_min, args.t_max, args.t_steps, args.t_spacing))
    return CurveConfig(N, g, args.boundary, times, args.gamma, args.method, args.prefactor_variant)


def _field(args) -> float:
    if args.g is not None and args.f is not None:
        raise ConfigError("give either --g or --f, not both")
    if args.g is not None:
        return float(args.g)
    if args.f is not None:
        return 2.0 * args.f / args.gamma
    raise ConfigError("one of --g or --f is required")


def run_theta(args, out) -> int:
    cfg = _curve_config(args, args.n, _field(args))
    write_rows(curve_rows(cfg), out)
    return EXIT_OK


def _scan_task(cfg: CurveConfig):
    return (cfg.g, cfg.N), curve_rows(cfg)


def run_scan(args, out) -> int:
    if args.g_list:
        gs = [float(x) for x in args.g_list]
    else:
        if args.g_steps < 1:
            raise ConfigError("g-steps must be at least 1")
        gs = [float(round(x, 12)) for x in np.linspace(args.g_min, args.g_max, args.g_steps)]
    Ns = args.n_list or [args.n]
    cfgs = [_curve_config(args, N, g) for g in gs for N in Ns]
    for c in cfgs:
        check_config(c)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_scan_task, cfgs))
    else:
        results = [_scan_task(c) for c in cfgs]
    # gather and order g-major, then N, then t, independent of scheduling
    results.sort(key=lambda r: r[0])
    rows = [row for _, rs in results for row in rs]
    write_rows(rows, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


@dataclass
class Check:
    name: str
    tolerance: float
    observed: float = float("nan")
    error: str = ""

    @property
    def passed(self) -> bool:
        return not self.error and bool(self.observed <= self.tolerance)


def _check_product_dense():
    err = 0.0
    for N in (4, 6, 8):
        for g in (0.5, 1.0, 1.5):
            spec = spin_oracle.ChainSpec(N, g, boundary="pbc")
            for t in (0.5, 2.0, 5.0):
                ref = spin_oracle.log_theta_dense(spec, t)
                err = max(err, abs(pbc_analytics.theta_product(N, g, t) - ref))
    return err


def _check_correlation_dense():
    err = 0.0
    for N in (4, 6, 8):
        for g in (0.5, 1.0, 1.5):
            spec = spin_oracle.ChainSpec(N, g, boundary="obc")
            t = np.array([0.5, 2.0, 5.0])
            ref = spin_oracle.log_theta_dense(spec, t)
            got = gaussian_fermions.log_theta_correlation(spec, t)
            err = max(err, float(np.max(np.abs(got - ref))))
    return err


def _check_roots_product():
    err = 0.0
    for N in (8, 20):
        for g in (0.5, 1.0):
            for t in (2.0, 10.0):
                a = pbc_analytics.theta_root_product(N, g, t)
                err = max(err, abs(a - pbc_analytics.theta_product(N, g, t)))
    return err


def _check_edge_product():
    N, g, t = 24, 0.5, 100.0
    spec = spin_oracle.ChainSpec(N, g, boundary="obc")
    ref = gaussian_fermions.log_theta_correlation(spec, t)
    got = obc_analytics.theta_exact_obc(N, g, t).log_theta
    return abs(got - ref) / abs(ref)


def _check_fock(rng):
    err = 0.0
    for N in (1, 2):
        for _ in range(5):
            W1 = fock.random_generator(N, rng, 0.7)
            W2 = fock.random_generator(N, rng, 0.7)
            r1, r2 = fock.gaussian_state(W1), fock.gaussian_state(W2)
            G1, G2 = fock.correlation(r1), fock.correlation(r2)
            ov = np.log(abs(np.trace(r1 @ r2)))
            err = max(err, abs(gaussian_fermions.gaussian_overlap(G1, G2) - ov))
            Gp = fock.correlation(r1 @ r2)
            err = max(err, float(np.max(np.abs(gaussian_fermions.gaussian_product(G1, G2) - Gp))))
    return err


def _check_rates(rng):
    err = 0.0
    for d in (2, 3):
        for _ in range(10):
            H = micro_rates.random_hamiltonian(d, rng)
            r = micro_rates.coupling_rates(H)
            loc, inter = micro_rates.split_local_interaction(micro_rates.pauli_decompose(H))
            c = d**4 / (d * d - 1) ** 2
            # the identity coefficient does not relax anything
            hl = loc.h.copy()
            hl[0, 0, 0, 0] = 0
            want_g = 2 * c * np.sum(np.abs(inter.h) ** 2)
            want_t = c * np.sum(np.abs(hl) ** 2)
            err = max(err, abs(r.gamma - want_g) / want_g, abs(r.tumbling - want_t) / want_t)
    return err


def _check_contraction(rng):
    err = 0.0
    I, S = (0, 1), (1, 0)
    for _ in range(2):
        H = micro_rates.random_hamiltonian(2, rng).matrix
        omega = micro_rates.entangling_power(H)
        c2, _ = replica_algebra.dt2_coefficient(
            lambda dt: replica_algebra.contraction_oracle(H, dt, 2, S, I, S, I))
        err = max(err, abs(c2.real + 2 * omega) / (2 * omega))
    return err


def _check_replica_k2():
    I, S = (0, 1), (1, 0)
    n2, coeff = replica_algebra.replica_correction(2, S, I, S, I, d=2, omega=1.0)
    # d^4 - 2 dt^2 Omega: the coefficient must be exactly -2
    return abs(coeff + 2.0)


def _check_entropy_identity():
    x = np.array([1e-6, 0.1, 1.0, 5.0])
    S = gaussian_fermions.theta_to_entropy(np.tanh(x))
    return float(np.max(np.abs(S - 2 * x) / (2 * x)))


def verify_checks(seed: int = 0) -> list[Check]:
    """Run every check; failures and exceptions are collected, not raised.

    Library functions are looked up through their modules on each call so
    that replacing one (for fault injection) is seen by the checks.
    """
    rng = np.random.default_rng(seed)
    plan = [
        ("product-vs-dense-pbc", 1e-8, _check_product_dense),
        ("correlation-vs-dense-obc", 1e-8, _check_correlation_dense),
        ("roots-vs-product-pbc", 1e-8, _check_roots_product),
        ("edge-product-vs-correlation-obc", 1e-4, _check_edge_product),
        ("gaussian-algebra-vs-fock", 1e-10, lambda: _check_fock(rng)),
        ("rate-identities", 1e-10, lambda: _check_rates(rng)),
        ("contraction-dt2-coefficient", 1e-4, lambda: _check_contraction(rng)),
        ("replica-correction-k2", 1e-12, _check_replica_k2),
        ("entropy-identity", 1e-12, _check_entropy_identity),
    ]
    out = []
    for name, tol, fun in plan:
        c = Check(name, tol)
        try:
            c.observed = float(fun())
        except Exception as exc:  # report and continue
            c.error = f"{type(exc).__name__}: {exc}"
        out.append(c)
    return out


def run_verify(args, out) -> int:
    checks = verify_checks(args.seed)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        line = f"{status} {c.name} tolerance={c.tolerance:.1e} observed={c.observed:.3e}"
        if c.error:
            line += f" error={c.error}"
        print(line, file=out)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK


# ---------------------------------------------------------------------------
# argument parsing


def _add_chain_args(p, scan=False):
    if scan:
        p.add_argument("--n", type=int, default=None, help="chain length (even)")
        p.add_argument("--n-list", type=int, nargs="+", default=None, help="several chain lengths")
        p.add_argument("--g-list", type=float, nargs="+", default=None, help="explicit field values")
        p.add_argument("--g-min", type=float, default=0.5)
        p.add_argument("--g-max", type=float, default=1.5)
        p.add_argument("--g-steps", type=int, default=11)
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
    else:
        p.add_argument("--n", type=int, required=True, help="chain length (even)")
        p.add_argument("--g", type=float, default=None, help="field g = 2f/gamma")
        p.add_argument("--f", type=float, default=None, help="measurement rate, with --gamma")
    p.add_argument("--gamma", type=float, default=1.0, help="coupling rate; times are t = tau/gamma")
    p.add_argument("--boundary", choices=("pbc", "obc"), default="pbc")
    p.add_argument("--t-min", type=float, default=0.1)
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--t-steps", type=int, default=50)
    p.add_argument("--t-spacing", choices=("linear", "log"), default="log")
    p.add_argument("--method", choices=METHODS, default="auto")
    p.add_argument("--prefactor-variant", choices=tuple(obc_analytics.PREFACTOR_VARIANTS), default="double",
                   help="sqrt(N) prefactor of the open-chain asymptote")
    p.add_argument("--out", default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="purification", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="rates of a two-qudit Hamiltonian file")
    p.add_argument("hamiltonian")
    p.add_argument("--f", type=float, default=None, help="measurement rate; reports g")
    p.add_argument("--real-only", action="store_true", help="reject complex entries")
    p.add_argument("--out", default=None)

    _add_chain_args(sub.add_parser("theta", help="entropy curve of one chain"))
    _add_chain_args(sub.add_parser("scan", help="entropy over a (g, N, t) grid"), scan=True)

    p = sub.add_parser("verify", help="cross-method checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.command == "scan" and args.n is None and not args.n_list:
        print("error: scan needs --n or --n-list", file=sys.stderr)
        return EXIT_CONFIG
    handler = {"rates": run_rates, "theta": run_theta, "scan": run_scan, "verify": run_verify}
    buf = io.StringIO()
    try:
        code = handler[args.command](args, buf)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SizeError, RootError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
