#!/usr/bin/env python3
"""
Rays Workbench
Command line for tracing dynamic-ray tails, inspecting splittings, counting
signed addresses, assigning fundamental hands, rendering figures and running
the conformance suite
"""

import argparse
import json
import math
import sys
import time

import numpy as np

from rays import conformance
from rays.addresses import ExternalAddress, Sign, SignedAddress, format_address, parse_address
from rays.config_manager import ConfigManager, parse_complex
from rays.console import configure_logging, env_jobs, print_header, status
from rays.errors import RaysError, TracerError, UnreadableCurve, UsageError, exit_code_for
from rays.hands import HandAtlas, build_partition
from rays.models import make_partition
from rays.render import render_svg
from rays.tracer import (RayTracer, TailCurve, count_signed_addresses, decompose_gamma,
                         signed_addresses_through, trace_many)

CHECK_NAMES = ("expansion", "cyclic_order", "convergence+", "convergence-", "counting",
               "bijection", "real_axis", "splitting", "disjoint_type", "interval_agreement")

# (point, expected number of signed addresses)
COUNTING_TABLES = {
    "coshsq": [(2.0, 2), (0.0, 4), (0.5j * math.pi, 8), (-0.5j * math.pi, 8)],
    "cosh": [(2.0, 2), (0.0, 4)],
}

SHARED_TOL = 1e-8


def _point(z):
    return [round(z.real, 12), round(z.imag, 12)]


class RayWorkbench:
    def __init__(self, config_path=None, user_path=None, overrides=None):
        self.config_manager = ConfigManager(config_path, user_path)
        self.config_manager.apply_overrides(overrides)
        self.config_manager.require_valid()

        self.family = self.config_manager.current_config["family"]
        self.model = self.config_manager.build_model()
        self.settings = self.config_manager.partition_settings()
        self.params = self.config_manager.trace_params()
        self.checks = self.config_manager.checks()
        self.output = self.config_manager.output()
        self.cfg = make_partition(self.model, self.settings["disk_radius"],
                                  self.settings["delta_angle"], self.settings["horizon"],
                                  self.settings["probe_factor"])
        self.tracer = RayTracer(self.model, self.cfg, self.params)
        self.jobs = env_jobs(self.checks["jobs"])
        self._atlas = None
        status(f"🚀 {self.model.name}: R_D = {self.cfg.disk_radius:g}, "
               f"delta at {self.cfg.delta_angle:.6g}, config {self.config_hash[:12]}")

    @property
    def config_hash(self):
        return self.config_manager.config_hash

    @property
    def seed(self):
        return self.checks["seed"]

    @property
    def atlas(self):
        """Hand atlas on a partition whose escaping singular tails are admissible"""
        if self._atlas is None:
            status("🔍 Searching partition parameters for the hand atlas...")
            cfg, esd = build_partition(self.model, self.settings, self.params)
            self._atlas = HandAtlas(self.model, cfg, esd, RayTracer(self.model, cfg, self.params))
            status(f"✅ Partition found: R_D = {cfg.disk_radius:g}, "
                   f"{len(esd.points)} escaping singular values")
        return self._atlas

    def _level(self, level):
        return self.params.level if level is None else level

    # Commands

    def trace(self, addresses, sign="+", level=None):
        level = self._level(level)
        targets = [SignedAddress(parse_address(a), Sign(sign)) for a in addresses]
        status(f"🔍 Tracing {len(targets)} tail(s) at level {level}...")
        try:
            curves = trace_many(self.model, self.cfg, self.params, targets, level, self.jobs)
        except TracerError as e:
            status(f"❌ Tracing failed: {e.describe()}")
            raise
        for curve in curves:
            status(f"✅ {curve.signed} level {level}: {len(curve)} vertices, "
                   f"{len(curve.markers)} critical marker(s)")
        return curves

    def split(self, address, level=None):
        level = self._level(level)
        base = parse_address(address)
        plus = self.tracer.curve(SignedAddress(base, Sign.PLUS), level)
        minus = self.tracer.curve(SignedAddress(base, Sign.MINUS), level)
        report = {"address": format_address(base), "level": level,
                  "config_hash": self.config_hash}
        parts = {"+": decompose_gamma(plus), "-": decompose_gamma(minus)}
        if not parts["+"].critical_points and not parts["-"].critical_points:
            status(f"📊 {format_address(base)}: signs identical at level {level}")
            report["identical"] = True
        else:
            report["identical"] = False
            report["shared_tail"] = self._shared_length(parts["+"].unbounded_tail,
                                                        parts["-"].unbounded_tail)
            c0 = (parts["+"].critical_points or parts["-"].critical_points)[0]
            report["c0"] = _point(c0)
            report["bristles"] = {key: self._bristle(d) for key, d in parts.items()}
            status(f"📊 {format_address(base)}: shared tail of {report['shared_tail']} "
                   f"vertices ending at c_0 = {c0:.6g}")
            for key, bristle in report["bristles"].items():
                if bristle:
                    status(f"   {key}: {bristle['vertices']} vertices to "
                           f"{complex(*bristle['end']):.6g}")
        report["curves"] = {"+": plus.to_json(self.model), "-": minus.to_json(self.model)}
        return report

    @staticmethod
    def _shared_length(a, b):
        n = min(len(a), len(b))
        apart = np.nonzero(np.abs(a[:n] - b[:n]) > SHARED_TOL)[0]
        return int(apart[0]) if len(apart) else n

    @staticmethod
    def _bristle(decomposition):
        if not decomposition.critical_points:
            return None
        segment = decomposition.segments[0]
        if len(decomposition.critical_points) > 1:
            end = decomposition.critical_points[1]
        elif len(segment):
            end = segment[-1]
        else:
            end = decomposition.critical_points[0]
        return {"start": _point(decomposition.critical_points[0]), "end": _point(end),
                "vertices": int(len(segment))}

    def count(self, point, enumerate_siblings=False):
        z = parse_complex(point)
        horizon = self.settings["horizon"]
        number = count_signed_addresses(self.model, z, horizon, self.params)
        report = {"point": _point(z), "horizon": horizon, "formula": number,
                  "config_hash": self.config_hash}
        status(f"📊 {z:.6g}: {number} signed addresses by the counting formula")
        if enumerate_siblings:
            found = signed_addresses_through(self.tracer, z, horizon, jobs=self.jobs)
            report["enumerated"] = [f"{format_address(s.addr)} {s.sign.value}" for s in found]
            mark = "✅" if len(found) == number else "⚠️ "
            status(f"{mark} {len(found)} distinct curves found through the point")
        return report

    def hand(self, address, sign="+", level=None):
        level = self._level(level)
        target = SignedAddress(parse_address(address), Sign(sign))
        atlas = self.atlas
        assignment = atlas.assign_hand(atlas.tracer.curve(target, level))
        status(f"📊 {target} level {level}: {assignment.case.value} case")
        rng = np.random.default_rng(self.seed)
        interval = atlas.address_interval(target, level, members=self.checks["interval_members"],
                                          rng=rng)
        status(f"✅ Inverse branch certified on {interval}")
        return {"target": str(target), "level": level, "assignment": assignment.to_json(),
                "interval": {"lo": str(interval.lo), "hi": str(interval.hi)},
                "seed": self.seed, "config_hash": self.config_hash}

    def load_curves(self, paths):
        curves = []
        for path in paths:
            try:
                with open(path, "r") as file:
                    data = json.load(file)
                items = data if isinstance(data, list) else [data]
                curves.extend(TailCurve.from_json(item) for item in items)
            except (OSError, ValueError, KeyError, TypeError) as e:
                status(f"❌ Cannot read curve file {path}: {e}")
                raise UnreadableCurve(f"cannot read curve file: {e}", path=path)
        return curves

    def render(self, curves, path, preimages=False, box=None, title=None):
        render_svg(self.model, curves, path, seed=self.seed, box=box, preimages=preimages,
                   title=title)
        status(f"💾 Figure written to {path}")
        return path

    # Conformance suite

    def _run_check(self, name):
        model, cfg, tracer = self.model, self.cfg, self.tracer
        checks = self.checks
        seed = self.seed
        base = ExternalAddress.periodic(conformance.positive_symbol(model))
        if name == "expansion":
            return conformance.check_expansion(model, cfg, checks["expansion_samples"], seed)
        if name == "cyclic_order":
            rng = np.random.default_rng(seed)
            addrs = conformance.order_addresses(model, checks["order_addresses"],
                                                checks["order_symbols"], rng)
            return conformance.check_cyclic_order(tracer, addrs,
                                                  checks["order_radius_factor"] * cfg.disk_radius,
                                                  jobs=self.jobs)
        if name.startswith("convergence"):
            limit = SignedAddress(base, Sign(name[-1]))
            terms, level = checks["convergence_terms"], checks["convergence_level"]
            start = conformance.approach_start(tracer, limit, terms, level)
            approach = conformance.approach_sequence(limit, cfg.symbol_order, terms, start)
            return conformance.check_convergence(tracer, limit, approach, level=level)
        if name == "counting":
            return conformance.check_counting(tracer, COUNTING_TABLES[self.family],
                                              self.settings["horizon"], jobs=self.jobs)
        if name == "bijection":
            targets = [SignedAddress(base, Sign.PLUS), SignedAddress(base, Sign.MINUS)]
            return conformance.check_bijection(tracer, targets)
        if name == "real_axis":
            return conformance.check_real_axis(tracer)
        if name == "splitting":
            return conformance.check_splitting(tracer)
        if name == "disjoint_type":
            return conformance.check_disjoint_type(model, cfg.disk_radius)
        if name == "interval_agreement":
            rng = np.random.default_rng(seed)
            targets = conformance.random_targets(model, checks["interval_targets"], rng)
            return conformance.check_interval_agreement(
                self.atlas, targets, checks["interval_level"], checks["interval_members"],
                checks["interval_points"], seed)
        raise UsageError(f"unknown check {name!r}")

    def available_checks(self):
        names = list(CHECK_NAMES)
        if self.family not in COUNTING_TABLES:
            names.remove("counting")
        if self.family not in ("cosh", "coshsq"):
            names.remove("real_axis")
            names.remove("splitting")
        return names

    def select_checks(self, selection=None):
        """Checks whose name starts with one of the filter words (all when empty)"""
        names = self.available_checks()
        if not selection:
            return names
        unknown = [s for s in selection if not any(n.startswith(s) for n in CHECK_NAMES)]
        if unknown:
            raise UsageError(f"unknown check filter {', '.join(unknown)}; "
                             f"choose from {', '.join(CHECK_NAMES)}")
        return [n for n in names if any(n.startswith(s) for s in selection)]

    def verify(self, selection=None, timings=False):
        print_header("RAYS CONFORMANCE SUITE")
        reports = []
        for name in self.select_checks(selection):
            started = time.perf_counter()
            try:
                report = self._run_check(name)
            except TracerError as e:
                report = conformance.CheckReport(name, False, None, 0.0, 0, detail=e.describe())
            if report.seed is None:
                report.seed = self.seed
            report.config_hash = self.config_hash
            if timings:
                report.runtime_ms = int(round(1000 * (time.perf_counter() - started)))
            mark = "✅" if report.passed else "❌"
            status(f"{mark} {report.name}: observed {report.observed} "
                   f"(threshold {report.threshold}) {report.detail}")
            reports.append(report)
        passed = sum(r.passed for r in reports)
        status(f"\n📊 {passed}/{len(reports)} checks passed")
        return reports


# Command line


def write_json(data, path=None):
    text = json.dumps(data, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as file:
            file.write(text)
    except OSError as e:
        status(f"❌ Cannot write {path}: {e}")
        raise UsageError(f"cannot write {path}: {e}", path=path)
    status(f"💾 Written {path}")


def _param_pairs(values):
    params = {}
    for item in values or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects key=value, got {item!r}")
        params[key.strip()] = value.strip()
    return params


def overrides_from(args):
    return {
        "family": args.family,
        "params": _param_pairs(args.param) or None,
        "partition": {"disk_radius": args.disk_radius, "delta_angle": args.delta_angle},
        "trace": {"depth": args.depth, "level": args.level, "step": args.step},
        "checks": {"seed": args.seed, "jobs": args.jobs},
        "output": {"out": args.out, "timings": True if args.timings else None},
    }


def cmd_trace(workbench, args):
    curves = workbench.trace(args.address, args.sign, args.level)
    data = [c.to_json(workbench.model) for c in curves]
    write_json(data[0] if len(data) == 1 else data, workbench.output["out"])
    svg = args.svg or workbench.output["svg"]
    if svg:
        workbench.render(curves, svg, preimages=args.preimages)
    return 0


def cmd_split(workbench, args):
    write_json(workbench.split(args.address, args.level), workbench.output["out"])
    return 0


def cmd_count(workbench, args):
    write_json(workbench.count(args.point, args.enumerate), workbench.output["out"])
    return 0


def cmd_hand(workbench, args):
    write_json(workbench.hand(args.address, args.sign, args.level), workbench.output["out"])
    return 0


def cmd_render(workbench, args):
    path = workbench.output["out"] or workbench.output["svg"]
    if not path:
        raise UsageError("render needs an output path (--out)")
    curves = workbench.load_curves(args.curves)
    if args.address:
        signs = ["+", "-"] if args.sign == "both" else [args.sign]
        for sign in signs:
            curves.extend(workbench.trace(args.address, sign, args.level))
    workbench.render(curves, path, preimages=args.preimages,
                     box=tuple(args.box) if args.box else None, title=args.title)
    return 0


def cmd_verify(workbench, args):
    timings = bool(workbench.output["timings"])
    reports = workbench.verify(args.checks, timings=timings)
    write_json([r.to_json() for r in reports], workbench.output["out"])
    return 0 if all(r.passed for r in reports) else 1


COMMANDS = {"trace": cmd_trace, "split": cmd_split, "count": cmd_count, "hand": cmd_hand,
            "render": cmd_render, "verify": cmd_verify}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("configuration")
    group.add_argument("--config", help="run configuration (YAML or JSON) merged over the defaults")
    group.add_argument("--family", choices=["cosh", "coshsq", "exp", "coshfamily"])
    group.add_argument("--param", action="append", metavar="KEY=VALUE",
                       help="family parameter, e.g. lambda=0.3 or a=0.1+0.2j")
    group.add_argument("--disk-radius", type=float)
    group.add_argument("--delta-angle", type=float, help="argument of the cut ray")
    group.add_argument("--depth", type=int)
    group.add_argument("--level", type=int)
    group.add_argument("--step", type=float)
    group.add_argument("--seed", type=int)
    group.add_argument("--jobs", type=int)
    group.add_argument("--timings", action="store_true", help="record runtime_ms in reports")
    group.add_argument("--out", help="output file (stdout when omitted)")

    parser = argparse.ArgumentParser(
        prog="rays",
        description="Dynamic-ray tails and signed addresses of cosh-type entire maps")
    sub = parser.add_subparsers(dest="command", metavar="command")

    trace = sub.add_parser("trace", parents=[common], help="trace tails and export curve JSON")
    trace.add_argument("--address", action="append", required=True,
                       help='address such as "0R | 0R" (repeat for several)')
    trace.add_argument("--sign", choices=["+", "-"], default="+")
    trace.add_argument("--svg", help="also render the curves to this SVG file")
    trace.add_argument("--preimages", action="store_true")

    split = sub.add_parser("split", parents=[common], help="compare both signs of an address")
    split.add_argument("--address", required=True)

    count = sub.add_parser("count", parents=[common], help="signed addresses of a point")
    count.add_argument("--point", required=True, help='complex point, e.g. "0+1.5707963j"')
    count.add_argument("--enumerate", action="store_true",
                       help="also trace the sibling curves through the point")

    hand = sub.add_parser("hand", parents=[common], help="hand assignment and address interval")
    hand.add_argument("--address", required=True)
    hand.add_argument("--sign", choices=["+", "-"], default="+")

    render = sub.add_parser("render", parents=[common], help="render curves to SVG")
    render.add_argument("curves", nargs="*", help="curve JSON files")
    render.add_argument("--address", action="append")
    render.add_argument("--sign", choices=["+", "-", "both"], default="both")
    render.add_argument("--preimages", action="store_true",
                        help="grey layer of iterated preimages of the real axis")
    render.add_argument("--box", type=float, nargs=4, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    render.add_argument("--title")

    verify = sub.add_parser("verify", parents=[common], help="run the conformance suite")
    verify.add_argument("checks", nargs="*", help=f"filter: {', '.join(CHECK_NAMES)}")

    return parser


def main(argv=None):
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    try:
        workbench = RayWorkbench(user_path=args.config, overrides=overrides_from(args))
        return COMMANDS[args.command](workbench, args)
    except RaysError as e:
        status(f"❌ {e.describe()}")
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
