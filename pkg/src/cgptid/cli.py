"""Command-line experiment drivers.

Subcommands reproduce the standard experiment protocol end to end: simulate
multistatic data for a configured shape, reconstruct tensors under a noise
sweep, build shape dictionaries, run the two identification algorithms over
noise trials, and emit the anti-diagonal tables used for symmetry detection.
All outputs are plain CSV/JSON with provenance headers and are deterministic
given the configuration and master seed (per-trial seeds are spawned from a
counter-based splitter, so results do not depend on execution order).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .cgpt import CgptPair, compute_cgpt, from_real_blocks
from .geometry import (
    SimilarityTransform,
    apply_transform,
    characteristic_size,
    parse_shape_spec,
    perturb_letter,
)
from .matching import (
    Dictionary,
    DictionaryEntry,
    algorithm1_match,
    algorithm2_match,
    anti_diagonal_means,
    petal_count,
    shape_descriptors,
)
from .msr import (
    ArrayConfig,
    add_noise,
    load_msr_csv,
    max_truncation_order,
    reconstruct_cgpt,
    resolving_order,
    save_msr_csv,
    simulate_msr,
)
from .potential import contrast_from_conductivity

DEFAULT_SIM_NODES = {"ellipse": 512, "flower": 512, "dflower": 1024, "letter": 2048}
DEFAULT_ORACLE_NODES = {"ellipse": 1024, "flower": 1024, "dflower": 2048, "letter": 2048}


@dataclass
class ExperimentConfig:
    shape: str = "ellipse:1,0.5"
    kappa: float = 4.0 / 3.0
    n_receivers: int = 51
    radius: float = 2.0
    center: tuple = (0.0, 0.0)
    transform_z: tuple = (0.0, 0.0)
    transform_s: float = 1.0
    transform_theta: float = 0.0
    sigma0: list = field(default_factory=lambda: [0.0])
    trials: int = 100
    tau0: float = 0.1
    order: int | None = None
    seed: int = 0
    n_nodes: int | None = None
    out: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if any(s < 0 for s in self.sigma0):
            raise ValueError("noise levels must be nonnegative")
        if not 0 < self.tau0 <= 1:
            raise ValueError("tau0 must lie in (0, 1]")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        kwargs = {}
        array = raw.pop("array", {})
        kwargs["n_receivers"] = array.get("n_receivers", 51)
        kwargs["radius"] = array.get("radius", 2.0)
        kwargs["center"] = tuple(array.get("center", (0.0, 0.0)))
        tr = raw.pop("transform", {})
        kwargs["transform_z"] = tuple(tr.get("z", (0.0, 0.0)))
        kwargs["transform_s"] = tr.get("s", 1.0)
        kwargs["transform_theta"] = tr.get("theta", 0.0)
        sigma0 = raw.pop("sigma0", [0.0])
        kwargs["sigma0"] = list(sigma0) if isinstance(sigma0, (list, tuple)) else [sigma0]
        for key in ("shape", "kappa", "trials", "tau0", "order", "seed", "n_nodes", "out"):
            if key in raw:
                kwargs[key] = raw[key]
        return cls(**kwargs)

    def transform(self) -> SimilarityTransform:
        return SimilarityTransform(
            z=complex(self.transform_z[0], self.transform_z[1]),
            s=self.transform_s,
            theta=self.transform_theta,
        )

    def echo(self) -> dict:
        return {
            "shape": self.shape,
            "kappa": self.kappa,
            "array": {"n_receivers": self.n_receivers, "radius": self.radius, "center": list(self.center)},
            "transform": {"z": list(self.transform_z), "s": self.transform_s, "theta": self.transform_theta},
            "sigma0": self.sigma0,
            "trials": self.trials,
            "tau0": self.tau0,
            "order": self.order,
            "seed": self.seed,
            "n_nodes": self.n_nodes,
        }


def _shape_kind(spec: str) -> str:
    return spec.partition(":")[0]


def build_target(config: ExperimentConfig):
    """Transformed shape plus the array configuration; validates the geometry."""
    n = config.n_nodes or DEFAULT_SIM_NODES.get(_shape_kind(config.shape), 512)
    base = parse_shape_spec(config.shape, n)
    target = apply_transform(base, config.transform())
    array = ArrayConfig(config.n_receivers, config.radius, config.center)
    if not target.contains_point(config.center):
        raise ValueError("array center must lie strictly inside the transformed shape")
    return base, target, array


def _provenance_lines(config_echo: dict) -> list:
    return [
        f"# generated-by=cgptid {__version__}",
        f"# config={json.dumps(config_echo, sort_keys=True)}",
    ]


def _write_table(path, header_lines, columns, rows):
    lines = list(header_lines)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(f"{v:.12e}" if isinstance(v, float) else str(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _trial_seeds(master: int, count: int):
    return np.random.SeedSequence(master).spawn(count)


def save_pair_json(path, pair: CgptPair, provenance: dict | None = None) -> None:
    payload = {
        "format": "cgpt-pair",
        "order": pair.order,
        "contrast": pair.contrast,
        "n1_re": pair.n1.real.tolist(),
        "n1_im": pair.n1.imag.tolist(),
        "n2_re": pair.n2.real.tolist(),
        "n2_im": pair.n2.imag.tolist(),
        "provenance": provenance or {},
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)


def load_pair_json(path) -> CgptPair:
    with open(path) as fh:
        raw = json.load(fh)
    if raw.get("format") != "cgpt-pair":
        raise ValueError("not a tensor-pair file")
    return CgptPair(
        order=raw["order"],
        n1=np.array(raw["n1_re"]) + 1j * np.array(raw["n1_im"]),
        n2=np.array(raw["n2_re"]) + 1j * np.array(raw["n2_im"]),
        contrast=raw.get("contrast"),
    )


def cmd_simulate(config: ExperimentConfig) -> list:
    """Simulate the response matrix; one file per noise realization."""
    _, target, array = build_target(config)
    noiseless = simulate_msr(target, config.kappa, array)
    meta = {"config": config.echo(), "sigma0": 0.0, "seed": None, "tool": f"cgptid {__version__}"}
    out = config.out or "msr.csv"
    written = []
    save_msr_csv(out, noiseless, meta)
    written.append(out)
    stem = out[:-4] if out.endswith(".csv") else out
    for sigma0 in config.sigma0:
        if sigma0 == 0:
            continue
        for trial, seed in enumerate(_trial_seeds(config.seed, config.trials)):
            noisy = add_noise(noiseless, sigma0, seed)
            path = f"{stem}_s{sigma0:g}_t{trial:03d}.csv"
            save_msr_csv(path, noisy, {**meta, "sigma0": sigma0, "seed": config.seed, "trial": trial})
            written.append(path)
    return written


def _oracle_blocks(config: ExperimentConfig, order: int):
    """High-resolution tensors of the shifted target, for error tables."""
    n = DEFAULT_ORACLE_NODES.get(_shape_kind(config.shape), 1024)
    base = parse_shape_spec(config.shape, n)
    target = apply_transform(base, config.transform())
    shifted = apply_transform(target, SimilarityTransform(z=-complex(*config.center)))
    lam = contrast_from_conductivity(config.kappa)
    from .cgpt import to_real_blocks

    return to_real_blocks(compute_cgpt(shifted, lam, order))


def reconstruction_sweep(config: ExperimentConfig, msr=None) -> dict:
    """Mean-reconstruction error tables over a noise sweep.

    For each noise level: pick the truncation order from the noise bound,
    average the per-trial reconstructions, and report relative errors of the
    diagonal blocks against high-resolution tensors together with the
    resolving order.
    """
    if msr is None:
        _, target, array = build_target(config)
        msr = simulate_msr(target, config.kappa, array)
    eps = _target_eps(config, msr)
    rows = []
    per_order = {}
    max_needed = 1
    results = []
    for sigma0 in config.sigma0:
        if sigma0 == 0:
            order = config.order or 5
            mean_m = reconstruct_cgpt(msr, order).m
            sigma_noise = 0.0
            m0 = order
        else:
            spread = float(msr.values.max() - msr.values.min())
            sigma_noise = spread * sigma0
            order = max_truncation_order(sigma_noise, msr.config.n_receivers, eps)
            if config.order:
                order = min(order, config.order)
            m0 = min(resolving_order(sigma_noise, config.tau0, eps), order)
            acc = np.zeros((2 * order, 2 * order))
            for seed in _trial_seeds(config.seed, config.trials):
                noisy = add_noise(msr, sigma0, seed)
                acc += reconstruct_cgpt(noisy, order).m
            mean_m = acc / config.trials
        results.append((sigma0, sigma_noise, order, m0, mean_m))
        max_needed = max(max_needed, order)
    oracle = _oracle_blocks(config, max_needed)
    from .cgpt import RealCgptBlocks
    from .msr import block_relative_errors

    reconstructions = {}
    for sigma0, sigma_noise, order, m0, mean_m in results:
        est = RealCgptBlocks(order=order, m=mean_m)
        errs = block_relative_errors(est, oracle)
        per_order[sigma0] = errs
        reconstructions[sigma0] = est
        err_at_m0 = float(errs[m0 - 1])
        rows.append((sigma0, sigma_noise, order, m0, err_at_m0))
    return {"rows": rows, "per_order": per_order, "eps": eps, "reconstructions": reconstructions}


def _target_eps(config: ExperimentConfig, msr) -> float:
    n = config.n_nodes or DEFAULT_SIM_NODES.get(_shape_kind(config.shape), 512)
    base = parse_shape_spec(config.shape, n)
    target = apply_transform(base, config.transform())
    return characteristic_size(target) / msr.config.radius


def cmd_reconstruct(config: ExperimentConfig, msr_path: str) -> dict:
    msr, _ = load_msr_csv(msr_path)
    out = reconstruction_sweep(config, msr=msr)
    stem = (config.out or "reconstruction")[: -4 if (config.out or "").endswith(".csv") else None]
    header = _provenance_lines(config.echo())
    _write_table(
        f"{stem}_summary.csv",
        header,
        ["sigma0", "sigma_noise", "truncation_order", "resolving_order", "rel_error_at_m0"],
        out["rows"],
    )
    order_rows = []
    for sigma0, errs in out["per_order"].items():
        for m, err in enumerate(errs, start=1):
            order_rows.append((sigma0, m, float(err)))
    _write_table(f"{stem}_per_order.csv", header, ["sigma0", "order", "rel_error"], order_rows)
    for sigma0, blocks in out["reconstructions"].items():
        save_pair_json(
            f"{stem}_cgpt_s{sigma0:g}.json",
            from_real_blocks(blocks),
            provenance={"config": config.echo(), "sigma0": sigma0, "source": msr_path},
        )
    return out


def build_dictionary_entries(specs, order: int, kappa: float, n_nodes: int | None = None, perturb=None):
    """Compute normalized tensors and descriptors for (name, shape, p) triples.

    Shapes are recentered at the area centroid and rescaled to characteristic
    size one before the tensors are computed.
    """
    lam = contrast_from_conductivity(kappa)
    entries = []
    for name, shape_spec, symmetry in specs:
        n = n_nodes or DEFAULT_ORACLE_NODES.get(_shape_kind(shape_spec), 1024)
        boundary = parse_shape_spec(shape_spec, n)
        if perturb:
            boundary = perturb_letter(boundary, perturb["magnitude"], perturb["smoothing"], perturb["seed"])
        centroid = boundary.centroid
        boundary = apply_transform(boundary, SimilarityTransform(z=-complex(centroid[0], centroid[1])))
        boundary = apply_transform(boundary, SimilarityTransform(s=1.0 / characteristic_size(boundary)))
        pair = compute_cgpt(boundary, lam, order)
        entries.append(
            DictionaryEntry(
                name=name,
                pair=pair,
                symmetry_order=symmetry,
                descriptors=shape_descriptors(pair),
                provenance={"shape": shape_spec, "kappa": kappa, "n_nodes": n},
            )
        )
    return entries


def cmd_build_dict(args, config: ExperimentConfig) -> Dictionary:
    specs = []
    if args.letters:
        specs += [(g, f"letter:{g}", 1) for g in args.letters]
    if args.flowers:
        petals, _, eta = args.flowers.partition(":")
        eta = float(eta or 0.3)
        for p in (int(v) for v in petals.split(",")):
            specs.append((f"flower{p}", f"flower:{p},{eta}", p))
    if not specs:
        raise ValueError("nothing to build: pass --letters and/or --flowers")
    order = config.order or 5
    entries = build_dictionary_entries(specs, order, config.kappa, config.n_nodes)
    dico = Dictionary(entries=tuple(entries))
    dico.save(config.out or "dictionary.json")
    return dico


def match_trials(
    dico: Dictionary,
    msr,
    algo: int,
    order: int,
    sigma0_list,
    trials: int,
    seed: int,
    expected: str | None = None,
):
    """Noise-trial matching study for one query response matrix.

    Returns, per noise level: the per-entry mean error, the winner histogram,
    and the success rate against `expected` (when given).
    """
    rec_order = max(2, order)
    results = {}
    for sigma0 in sigma0_list:
        err_acc = dict.fromkeys(dico.names, 0.0)
        wins = dict.fromkeys(dico.names, 0)
        n_trials = 1 if sigma0 == 0 else trials
        for seed_child in _trial_seeds(seed, n_trials):
            noisy = add_noise(msr, sigma0, seed_child) if sigma0 else msr
            pair = from_real_blocks(reconstruct_cgpt(noisy, rec_order))
            if algo == 1:
                report = algorithm1_match(pair, dico, order)
            else:
                report = algorithm2_match(shape_descriptors(pair), dico, order)
            for name, err in report.ranking:
                err_acc[name] += err
            wins[report.winner] += 1
        mean_err = {k: v / n_trials for k, v in err_acc.items()}
        entry = {
            "mean_error": mean_err,
            "wins": wins,
            "mean_argmin": min(mean_err, key=mean_err.get),
        }
        if expected is not None:
            entry["success_rate"] = wins[expected] / n_trials
        results[sigma0] = entry
    return results


def cmd_match(args, config: ExperimentConfig) -> dict:
    dico = Dictionary.load(args.dict)
    if args.query.endswith(".json"):
        pair = load_pair_json(args.query)
        if args.algo == 1:
            report = algorithm1_match(pair, dico, config.order or dico.order)
        else:
            report = algorithm2_match(shape_descriptors(pair), dico, config.order or dico.order)
        payload = {
            "mode": "exact",
            "ranking": [[n, e] for n, e in report.ranking],
            "winner": report.winner,
        }
    else:
        msr, _ = load_msr_csv(args.query)
        results = match_trials(
            dico,
            msr,
            args.algo,
            config.order or dico.order,
            config.sigma0,
            config.trials,
            config.seed,
            expected=args.expected,
        )
        payload = {"mode": "trials", "results": {str(k): v for k, v in results.items()}}
    payload["config"] = config.echo()
    payload["tool"] = f"cgptid {__version__}"
    payload["algorithm"] = args.algo
    with open(config.out or "match.json", "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
    return payload


def petal_trials(msr, p_max: int, sigma0_list, trials: int, seed: int):
    """Anti-diagonal tables and symmetry detections over noise trials.

    Reports per-trial detections alongside the detection made on the
    trial-averaged reconstruction; averaging the reconstructions suppresses
    the noise on high-order anti-diagonals and is the reading used for the
    reference tables.
    """
    order = p_max - 1
    results = {}
    for sigma0 in sigma0_list:
        n_trials = 1 if sigma0 == 0 else trials
        acc_means = np.zeros(p_max - 1)
        acc_blocks = np.zeros((2 * order, 2 * order))
        detections = []
        for seed_child in _trial_seeds(seed, n_trials):
            noisy = add_noise(msr, sigma0, seed_child) if sigma0 else msr
            blocks = reconstruct_cgpt(noisy, order)
            acc_blocks += blocks.m
            desc = shape_descriptors(from_real_blocks(blocks))
            acc_means += anti_diagonal_means(desc, p_max)
            try:
                detections.append(petal_count(desc, p_max))
            except Exception:
                detections.append(0)
        from .cgpt import RealCgptBlocks

        mean_desc = shape_descriptors(
            from_real_blocks(RealCgptBlocks(order=order, m=acc_blocks / n_trials))
        )
        try:
            mean_detection = petal_count(mean_desc, p_max)
        except Exception:
            mean_detection = 0
        results[sigma0] = {
            "mean_antidiag": acc_means / n_trials,
            "detections": detections,
            "mean_reconstruction_detection": mean_detection,
        }
    return results


def cmd_petal(args, config: ExperimentConfig) -> dict:
    msr, _ = load_msr_csv(args.query)
    results = petal_trials(msr, args.p_max, config.sigma0, config.trials, config.seed)
    header = _provenance_lines(config.echo())
    rows = []
    for sigma0, res in results.items():
        counts = res["detections"]
        detected = max(set(counts), key=counts.count) if counts else 0
        rows.append(
            [sigma0, detected, res["mean_reconstruction_detection"]]
            + [float(v) for v in res["mean_antidiag"]]
        )
    _write_table(
        config.out or "petal.csv",
        header,
        ["sigma0", "detected_p", "mean_rec_p"] + [f"l{l}" for l in range(2, args.p_max + 1)],
        rows,
    )
    return results


def cmd_sweep(config: ExperimentConfig) -> dict:
    out = reconstruction_sweep(config)
    stem = config.out or "sweep"
    header = _provenance_lines(config.echo())
    _write_table(
        f"{stem}_summary.csv",
        header,
        ["sigma0", "sigma_noise", "truncation_order", "resolving_order", "rel_error_at_m0"],
        out["rows"],
    )
    order_rows = []
    for sigma0, errs in out["per_order"].items():
        for m, err in enumerate(errs, start=1):
            order_rows.append((sigma0, m, float(err)))
    _write_table(f"{stem}_per_order.csv", header, ["sigma0", "order", "rel_error"], order_rows)
    return out


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        config.seed = args.seed
    if args.trials is not None:
        config.trials = args.trials
    if args.sigma0 is not None:
        config.sigma0 = [float(v) for v in args.sigma0.split(",")]
    if args.order is not None:
        config.order = args.order
    if args.tau0 is not None:
        config.tau0 = args.tau0
    if args.out is not None:
        config.out = args.out
    return config


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgptid", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cgptid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--sigma0", help="comma-separated noise levels")
        p.add_argument("--order", type=int)
        p.add_argument("--tau0", type=float)
        p.add_argument("--out")
        p.add_argument("--shape", help="shape spec, e.g. flower:5,0.3")

    p = sub.add_parser("simulate", help="simulate response matrices")
    common(p)
    p = sub.add_parser("reconstruct", help="reconstruct tensors from a response file")
    common(p)
    p.add_argument("query", help="MSR csv file")
    p = sub.add_parser("build-dict", help="precompute a shape dictionary")
    common(p)
    p.add_argument("--letters", help="letters to include, e.g. ABCP")
    p.add_argument("--flowers", help="petal counts and amplitude, e.g. 3,4,5:0.3")
    p = sub.add_parser("match", help="identify a query against a dictionary")
    common(p)
    p.add_argument("--dict", required=True)
    p.add_argument("--query", required=True, help="MSR csv or tensor-pair json")
    p.add_argument("--algo", type=int, choices=(1, 2), default=1)
    p.add_argument("--expected", help="name counted as a success")
    p = sub.add_parser("petal", help="anti-diagonal symmetry table for a query")
    common(p)
    p.add_argument("--query", required=True, help="MSR csv file")
    p.add_argument("--p-max", type=int, default=11, dest="p_max")
    p = sub.add_parser("sweep", help="simulate + reconstruction noise sweep")
    common(p)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    config = _apply_overrides(config, args)
    if getattr(args, "shape", None):
        config.shape = args.shape
    if args.command == "simulate":
        written = cmd_simulate(config)
        print("\n".join(written))
    elif args.command == "reconstruct":
        out = cmd_reconstruct(config, args.query)
        for row in out["rows"]:
            print(f"sigma0={row[0]:g} K={row[2]} m0={row[3]} rel_err@m0={row[4]:.3e}")
    elif args.command == "build-dict":
        dico = cmd_build_dict(args, config)
        print(f"wrote {len(dico)} entries to {config.out or 'dictionary.json'}")
    elif args.command == "match":
        payload = cmd_match(args, config)
        if payload["mode"] == "exact":
            print(f"winner: {payload['winner']}")
        else:
            for sigma0, res in payload["results"].items():
                extra = f" success={res['success_rate']:.2%}" if "success_rate" in res else ""
                print(f"sigma0={sigma0}: mean-argmin {res['mean_argmin']}{extra}")
    elif args.command == "petal":
        results = cmd_petal(args, config)
        for sigma0, res in results.items():
            counts = res["detections"]
            top = max(set(counts), key=counts.count)
            print(f"sigma0={sigma0:g}: detected p={top} in {counts.count(top)}/{len(counts)} trials")
    elif args.command == "sweep":
        out = cmd_sweep(config)
        for row in out["rows"]:
            print(f"sigma0={row[0]:g} K={row[2]} m0={row[3]} rel_err@m0={row[4]:.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
