"""Command-line driver: parse, validate, analyze, embed and cross-check.

Exit codes: 0 when the analysis completed (whatever the verdict), 1 for an
invalid spec, 2 for internal errors, failed certificates, oracle
discrepancies and fixture-suite mismatches.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .decide import FiniteComponents, decide_affinizable, schedule, verdict_json
from .dsl import InvalidSpecError, SpecSyntaxError, TopologySpec, ValidationReport, parse, validate
from .embed import EmbeddingError, embed, embedding_json, verify_embedding
from .geom import fmt_rational, parse_set, render
from .oracle import run_oracle
from .shadow import (
    ShadowMap,
    affine_comparison,
    classify,
    is_clopen,
    is_open,
    shadow_bound,
    shadow_map,
    shadows_at,
    tau_closure,
)

COMMANDS = ("check", "analyze", "decide", "shadows", "closure", "embed", "oracle")

EXIT_OK, EXIT_INVALID, EXIT_FAILURE = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    input: Optional[str]
    command: str
    json_out: Optional[str] = None
    oracle_resolution: int = 8
    schedule_depth: int = 12
    seed: int = 0
    at: Optional[str] = None      # point for ``shadows``
    subset: Optional[str] = None  # set for ``closure``

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.oracle_resolution < 1 or self.schedule_depth < 1:
            raise ValueError("resolution and depth must be at least 1")


# --------------------------------------------------------------------------
# JSON builders


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _jsonable(v):
    if isinstance(v, Fraction):
        return fmt_rational(v)
    return v


def report_json(report: ValidationReport) -> dict:
    return {"valid": report.ok,
            "failures": [{"check": f.check, "witness": {k: _jsonable(v) for k, v in f.witness.items()},
                          "detail": f.detail} for f in report.failures]}


def shadow_map_json(m: ShadowMap) -> dict:
    return {
        "points": {fmt_rational(q): render(s) for q, s in m.points},
        "cells": [{
            "cell": c.cell.fmt(),
            "breakpoints": [fmt_rational(b) for b in c.breakpoints],
            "subcells": [{"interval": f"({fmt_rational(sc.lo)},{fmt_rational(sc.hi)})",
                          "functions": [f.fmt() for f in sc.functions],
                          "spans": [[lo.fmt(), hi.fmt()] for lo, hi in sc.spans]} for sc in c.subcells],
            "at_breakpoints": {fmt_rational(b): render(s) for b, s in c.at_breakpoints},
        } for c in m.cells],
    }


def analysis_json(spec: TopologySpec) -> dict:
    return {
        "valid": True,
        "cells": [c.fmt() for c in spec.cells],
        "classification": [{"region": render(r), "class": pc.value} for r, pc in classify(spec)],
        "comparison": [{"region": render(c.region), "coarser": c.coarser, "finer": c.finer,
                        "basis": c.basis_class.value} for c in affine_comparison(spec)],
        "shadow_bound": shadow_bound(spec),
        "shadows": shadow_map_json(shadow_map(spec)),
        "verdict": verdict_json(decide_affinizable(spec)),
    }


def facts(spec: TopologySpec) -> dict:
    """Flat summary of a validated spec, as compared by the fixture suite."""
    v = decide_affinizable(spec)
    out = {"valid": True, "hausdorff": v.hausdorff}
    if not v.hausdorff:
        out["separation"] = [fmt_rational(v.separation.p), fmt_rational(v.separation.q)]
        return out
    ex = v.exceptional
    out.update(regular=v.regular, affinizable=v.affinizable, c3=v.c3, c4=v.c4,
               consistent=v.consistent(), E=render(ex.E), A=render(ex.A), rays=len(ex.rays))
    comps = v.components
    if isinstance(comps, FiniteComponents):
        out["components"] = len(comps.parts)
        out["parts"] = [render(p) for p in comps.parts]
    else:
        out["components"] = "infinite"
        out["disconnected"] = [f"({fmt_rational(iv.lo)},{fmt_rational(iv.hi)}):{pc.value}"
                               for iv, pc in comps.disconnected]
        if comps.clopen is not None:
            out["clopen"] = render(comps.clopen.Z)
            out["clopen_certified"] = comps.clopen.certified
    m = shadow_map(spec)
    out["generic"] = {c.cell.fmt(): [[f.fmt() for f in sc.functions] for sc in c.subcells] for c in m.cells}
    return out


def _probe(spec: TopologySpec, key: str):
    """Values for manifest keys of the form ``S(q)``."""
    if key.startswith("S(") and key.endswith(")"):
        return render(shadows_at(spec, Fraction(key[2:-1])))
    raise KeyError(key)


# --------------------------------------------------------------------------
# commands


def _load(path: str) -> tuple[Optional[TopologySpec], ValidationReport]:
    spec = parse(Path(path).read_text(encoding="utf-8"))
    report = validate(spec)
    if not report.ok:
        return None, report
    return replace(spec, validated=True), report


def _print_failures(report: ValidationReport) -> None:
    print("invalid spec")
    for f in report.failures:
        w = ", ".join(f"{k}={_jsonable(v)}" for k, v in f.witness.items())
        print(f"  {f.check}: {w}" + (f" ({f.detail})" if f.detail else ""))


def _write(cfg: RunConfig, payload: dict) -> None:
    if cfg.json_out:
        Path(cfg.json_out).write_text(dumps(payload), encoding="utf-8")


def _cmd_analyze(cfg, spec) -> tuple[int, dict]:
    data = analysis_json(spec)
    v = data["verdict"]
    print(f"hausdorff={v['hausdorff']} regular={v['regular']} affinizable={v['affinizable']}")
    for row in data["classification"]:
        print(f"  {row['region']}: {row['class']}")
    return EXIT_OK, data


def _cmd_decide(cfg, spec) -> tuple[int, dict]:
    data = verdict_json(decide_affinizable(spec))
    print(f"hausdorff={data['hausdorff']} regular={data['regular']} affinizable={data['affinizable']}")
    if data["conditions"]["c3"] is not None:
        print(f"  c3={data['conditions']['c3']} c4={data['conditions']['c4']}")
    return EXIT_OK, data


def _cmd_shadows(cfg, spec) -> tuple[int, dict]:
    if cfg.at is not None:
        s = shadows_at(spec, Fraction(cfg.at))
        print(f"S({cfg.at}) = {render(s)}")
        return EXIT_OK, {"point": fmt_rational(Fraction(cfg.at)), "shadows": render(s)}
    data = shadow_map_json(shadow_map(spec))
    for q, s in data["points"].items():
        print(f"S({q}) = {s}")
    for c in data["cells"]:
        for sc in c["subcells"]:
            print(f"{sc['interval']}: {{{', '.join(sc['functions'])}}}")
    return EXIT_OK, data


def _cmd_closure(cfg, spec) -> tuple[int, dict]:
    if cfg.subset is None:
        raise ValueError("closure needs a set argument")
    z = parse_set(cfg.subset) & spec.space
    cl = tau_closure(spec, z)
    data = {"set": render(z), "closure": render(cl), "open": is_open(spec, z), "closed": cl == z,
            "clopen": is_clopen(spec, z)}
    print(f"cl({render(z)}) = {render(cl)}")
    return EXIT_OK, data


def _cmd_embed(cfg, spec) -> tuple[int, dict]:
    v = decide_affinizable(spec, with_components=False)
    if not v.affinizable:
        reason = "not Hausdorff" if not v.hausdorff else "exceptional set is infinite"
        print(f"not affinizable: {reason}")
        return EXIT_OK, {"affinizable": False, "reason": reason}
    try:
        n, emb = embed(spec)
    except EmbeddingError as e:
        print(f"embedding failed: {e}")
        return EXIT_FAILURE, {"affinizable": True, "error": str(e)}
    cert = verify_embedding(spec, emb, schedule(cfg.schedule_depth))
    data = {"affinizable": True, **embedding_json(n, emb, cert)}
    print(f"{len(emb.anchors)} anchors, {len(emb.curves)} curves, certificate "
          + ("passed" if cert.passed else "FAILED"))
    for f in cert.failures[:5]:
        print(f"  {f.describe()}")
    return (EXIT_OK if cert.passed else EXIT_FAILURE), data


def _cmd_oracle(cfg, spec) -> tuple[int, dict]:
    rep = run_oracle(spec, cfg.oracle_resolution, cfg.schedule_depth, cfg.seed)
    print(f"oracle: {sum(rep.checks.values())} checks, {len(rep.discrepancies)} discrepancies")
    for d in rep.discrepancies[:10]:
        print(f"  {d.check} at {d.location}: symbolic {d.symbolic}, sampled {d.sampled}")
    return (EXIT_OK if rep.ok else EXIT_FAILURE), rep.to_json()


_DISPATCH = {"analyze": _cmd_analyze, "decide": _cmd_decide, "shadows": _cmd_shadows,
             "closure": _cmd_closure, "embed": _cmd_embed, "oracle": _cmd_oracle}


def run(cfg: RunConfig) -> int:
    try:
        spec, report = _load(cfg.input)
    except SpecSyntaxError as e:
        print(f"syntax error: {e}")
        _write(cfg, {"valid": False, "syntax_error": str(e)})
        return EXIT_INVALID
    except OSError as e:
        print(f"cannot read {cfg.input}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    if spec is None:
        _print_failures(report)
        _write(cfg, report_json(report))
        return EXIT_INVALID
    if cfg.command == "check":
        print("valid")
        _write(cfg, report_json(report))
        return EXIT_OK
    try:
        code, data = _DISPATCH[cfg.command](cfg, spec)
    except InvalidSpecError as e:  # pragma: no cover - spec was validated above
        print(f"invalid spec: {e}")
        return EXIT_INVALID
    except Exception as e:
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    _write(cfg, data)
    return code


# --------------------------------------------------------------------------
# fixture suite


def fixture_dir() -> Path:
    return Path(str(resources.files("deftopo") / "fixtures"))


@dataclass(frozen=True)
class SuiteRow:
    name: str
    key: str
    expected: object
    actual: object

    @property
    def ok(self) -> bool:
        return self.expected == self.actual


def suite_rows(manifest: dict, root: Path, with_oracle: bool = False, resolution: int = 8,
               depth: int = 12, seed: int = 0) -> list[SuiteRow]:
    rows = []
    for name, entry in sorted(manifest["fixtures"].items()):
        text = (root / entry["file"]).read_text(encoding="utf-8")
        spec = parse(text)
        report = validate(spec)
        if report.ok:
            spec = replace(spec, validated=True)
            got = facts(spec)
        else:
            got = report_json(report)
        for key, want in sorted(entry["expect"].items()):
            if key in got:
                actual = got[key]
            elif report.ok:
                try:
                    actual = _probe(spec, key)
                except KeyError:
                    actual = None
            else:
                actual = None
            rows.append(SuiteRow(name, key, want, actual))
        if with_oracle and report.ok:
            rep = run_oracle(spec, resolution, depth, seed)
            rows.append(SuiteRow(name, "oracle.discrepancies", 0, len(rep.discrepancies)))
    return rows


def run_fixture_suite(manifest_path: Optional[str] = None, with_oracle: bool = False,
                      json_out: Optional[str] = None, resolution: int = 8, depth: int = 12,
                      seed: int = 0) -> int:
    """Analyze every fixture and compare with the manifest; exit 2 on any mismatch."""
    path = Path(manifest_path) if manifest_path else fixture_dir() / "expected.json"
    manifest = json.loads(path.read_text(encoding="utf-8"))
    root = path.parent
    rows = suite_rows(manifest, root, with_oracle, resolution, depth, seed)
    names = sorted({r.name for r in rows})
    width = max(len(n) for n in names) if names else 4
    print(f"{'fixture':<{width}}  checks  status")
    for n in names:
        mine = [r for r in rows if r.name == n]
        bad = [r for r in mine if not r.ok]
        print(f"{n:<{width}}  {len(mine):>6}  {'ok' if not bad else 'MISMATCH'}")
        for r in bad:
            print(f"  {r.key}: expected {json.dumps(r.expected, ensure_ascii=False)}, "
                  f"got {json.dumps(r.actual, ensure_ascii=False)}")
    mismatches = [r for r in rows if not r.ok]
    if json_out:
        Path(json_out).write_text(dumps({
            "rows": [{"fixture": r.name, "key": r.key, "expected": r.expected, "actual": r.actual,
                      "ok": r.ok} for r in rows],
            "mismatches": len(mismatches)}), encoding="utf-8")
    print(f"{len(rows) - len(mismatches)}/{len(rows)} checks match")
    return EXIT_FAILURE if mismatches else EXIT_OK


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="deftopo", description="Definable topologies on the line.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", dest="json_out", metavar="PATH", help="write the JSON report here")
    common.add_argument("--resolution", type=int, default=8, help="oracle grid exponent (spacing 2^-k)")
    common.add_argument("--depth", type=int, default=12, help="scale schedule depth (2^-1 .. 2^-depth)")
    common.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("input")
        if name == "shadows":
            sp.add_argument("--at", help="a single point instead of the whole map")
        if name == "closure":
            sp.add_argument("subset", help='a set such as "(0,1/8) ∪ {2}"')
    sp = sub.add_parser("suite", parents=[common], help="run the bundled fixture suite")
    sp.add_argument("--manifest", help="manifest path (default: bundled expected.json)")
    sp.add_argument("--with-oracle", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.resolution < 1 or args.depth < 1:
        print("resolution and depth must be at least 1", file=sys.stderr)
        return EXIT_FAILURE
    if args.command == "suite":
        return run_fixture_suite(args.manifest, args.with_oracle, args.json_out,
                                 args.resolution, args.depth, args.seed)
    cfg = RunConfig(args.input, args.command, args.json_out, args.resolution, args.depth, args.seed,
                    getattr(args, "at", None), getattr(args, "subset", None))
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
