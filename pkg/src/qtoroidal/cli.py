"""Command-line driver: run verification suites and emit a JSON report."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .cache import OperatorCache
from .config import SUITES, ConfigError, SuiteConfig, load_config
from .fock import FockBasis
from .params import AlgebraParams
from .report import VerificationReport

log = logging.getLogger("qtoroidal")


def _suite_bosons(cfg, params, store):
    from .bosons import check_boson_algebra
    return check_boson_algebra(params)


def _suite_contractions(cfg, params, store):
    from .tables import check_contraction_tables
    return check_contraction_tables(params)


def _suite_relations(cfg, params, store):
    from .relations import check_defining_relations
    basis = FockBasis(cfg.m, cfg.n, cfg.D_max, cfg.L_max)
    return (check_defining_relations(params, basis, False, cfg.window, cfg.r_max, cfg.tol)
            + check_defining_relations(params, basis, True, cfg.window, cfg.r_max, cfg.tol))


def _suite_affine(cfg, params, store):
    from .relations import check_affine_commutativity
    basis = FockBasis(cfg.m, cfg.n, cfg.D_max, cfg.L_max)
    return check_affine_commutativity(params, basis, tol=cfg.tol)


def _suite_cancellation(cfg, params, store):
    from .relations import check_delta_commutators, check_pointwise_cancellation
    basis = FockBasis(cfg.m, cfg.n, min(cfg.D_max, 2), cfg.L_max)
    out = []
    for dressed in (False, True):
        out += check_pointwise_cancellation(params, basis, dressed, cfg.tol)
        out += check_delta_commutators(params, basis, dressed, tol=cfg.tol)
    return out


def _suite_coproduct(cfg, params, store):
    from .coproduct import coproduct_cross_check
    if cfg.n != 2:
        return None
    return coproduct_cross_check(params)


def _suite_highest_weight(cfg, params, store):
    from .highest_weight import check_highest_weight
    return check_highest_weight(params)


def _suite_iom(cfg, params, store):
    from .iom import DualitySettings, verify_duality
    if (cfg.m, cfg.n) != (2, 2):
        return None
    s = DualitySettings(cfg.iom_D_max, cfg.iom_L_max, tuple(cfg.ladder), cfg.delta)
    return verify_duality(params, s, store=store)


RUNNERS = {
    "bosons": _suite_bosons, "contractions": _suite_contractions,
    "relations": _suite_relations, "affine": _suite_affine,
    "cancellation": _suite_cancellation, "coproduct": _suite_coproduct,
    "highest-weight": _suite_highest_weight, "iom-duality": _suite_iom,
}


def run_suite(cfg: SuiteConfig, params: AlgebraParams | None = None
              ) -> tuple[VerificationReport, dict]:
    """Run the selected suites in dependency order; returns the report and its header."""
    params = params or cfg.resolve_params()
    store = OperatorCache(cfg.cache)
    report = VerificationReport()
    skipped = []
    for name in SUITES:
        if name not in cfg.suites:
            continue
        log.info("suite %s", name)
        t0 = time.perf_counter()
        recs = RUNNERS[name](cfg, params, store)
        log.info("suite %s done in %.1f s", name, time.perf_counter() - t0)
        if recs is None:
            skipped.append(name)
            continue
        report.extend(recs)
    log.info("operator cache: %d hits, %d misses", store.hits, store.misses)
    header = {
        "version": __version__, "config_hash": cfg.digest(), "params": params.to_dict(),
        "suites": [s for s in SUITES if s in cfg.suites], "skipped": skipped,
        "passed": report.passed,
        "generated": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    return report, header


def _parse_list(text: str, conv=str) -> list:
    return [conv(x.strip()) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qtoroidal", description=__doc__)
    ap.add_argument("command", nargs="?", default="run",
                    choices=("run", "build-iom", "verify-duality"))
    ap.add_argument("--config", help="YAML or JSON configuration file")
    ap.add_argument("--suite", help="comma-separated suites: " + ",".join(SUITES))
    ap.add_argument("--seed", type=int, help="parameter seed (u64)")
    ap.add_argument("--report", help="write the JSON report here instead of stdout")
    ap.add_argument("--cache", help="operator cache directory")
    ap.add_argument("--ladder", help="comma-separated theta truncation orders")
    ap.add_argument("--kind", default="G", help="build-iom: G, G*, Gc or Gc*")
    ap.add_argument("--index", type=int, default=0, help="build-iom: sector index")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args) -> SuiteConfig:
    cfg = load_config(args.config) if args.config else SuiteConfig()
    if args.suite:
        cfg.suites = _parse_list(args.suite)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.report:
        cfg.report = args.report
    if args.cache:
        cfg.cache = args.cache
    if args.ladder:
        try:
            cfg.ladder = _parse_list(args.ladder, int)
        except ValueError as exc:
            raise ConfigError(f"ladder: {exc}") from exc
    if args.command == "verify-duality":
        cfg.suites = ["iom-duality"]
    return cfg.validate()


def _build_iom_command(cfg: SuiteConfig, args) -> dict:
    from .iom import KINDS, Truncation, build_iom, duality_weights, iom_key
    if (cfg.m, cfg.n) != (2, 2):
        raise ConfigError("m: build-iom supports m = n = 2 only")
    if args.kind not in KINDS:
        raise ConfigError(f"kind: unknown kind {args.kind!r}; known: {', '.join(KINDS)}")
    params = cfg.resolve_params()
    basis = FockBasis(cfg.m, cfg.n, cfg.iom_D_max, cfg.iom_L_max)
    w, wc = duality_weights(params)
    wk = wc if KINDS[args.kind].dual else w
    tr = Truncation(basis.D_max, basis.L_max, cfg.ladder[-1])
    store = OperatorCache(cfg.cache)
    op = store.get_or_build(basis, iom_key(params, basis, args.kind, args.index, wk, tr),
                            lambda: build_iom(params, basis, args.kind, args.index, wk, tr).op)
    return {"kind": args.kind, "index": args.index, "K": tr.K, "dim": basis.size,
            "nnz": int(op.mat.nnz), "leaking_columns": int(op.leak.sum()),
            "cache": {"hits": store.hits, "misses": store.misses}}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "build-iom":
            import json
            print(json.dumps(_build_iom_command(cfg, args), indent=1))
            return 0
        report, header = run_suite(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    text = report.to_json(header)
    if cfg.report:
        Path(cfg.report).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.report).write_text(text + "\n")
    else:
        print(text)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
