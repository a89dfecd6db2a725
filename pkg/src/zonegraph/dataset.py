"""On-disk synthetic datasets: one directory per model."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .brep import BRep, parse_brep, serialize_brep
from .proposals import Extrusion
from .synth import SynthConfig, SynthProgram, build_example, generate_program
from .zones import ZoneGraph, dump_zone_graph, load_zone_graph, zone_graph_from_brep

INDEX = "index.json"


def program_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0] >> 1)


def model_name(index: int) -> str:
    return f"model_{index:05d}"


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")))


def generate_dataset(out_dir, count: int, seed: int, cfg: SynthConfig = SynthConfig()) -> list:
    """Write ``count`` models (model.json, gt.json, zg.json each) plus an index."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i in range(count):
        ps = program_seed(seed, i)
        program = generate_program(ps, cfg)
        brep, zg, ops = build_example(program)
        d = out / model_name(i)
        d.mkdir(exist_ok=True)
        _write_json(d / "model.json", serialize_brep(brep))
        _write_json(d / "gt.json", {
            "program_seed": ps,
            "program": program.to_json(),
            "zone_ops": [e.to_json() for e in ops],
        })
        _write_json(d / "zg.json", dump_zone_graph(zg))
        names.append(model_name(i))
    _write_json(out / INDEX, {
        "count": count, "seed": seed,
        "config": {"min_ops": cfg.min_ops, "max_ops": cfg.max_ops, "grid": cfg.grid},
        "models": names,
    })
    return names


@dataclass
class Record:
    model_id: str
    brep: BRep
    zg: ZoneGraph
    program: Optional[SynthProgram]
    gt_ops: list

    def zone_graph(self, simplify: bool = False) -> ZoneGraph:
        return self.zg if not simplify else zone_graph_from_brep(self.brep, simplify=True)


def load_record(model_dir) -> Record:
    d = Path(model_dir)
    brep = parse_brep(json.loads((d / "model.json").read_text()))
    zg_path = d / "zg.json"
    zg = load_zone_graph(json.loads(zg_path.read_text())) if zg_path.exists() else zone_graph_from_brep(brep)
    program, ops = None, []
    gt_path = d / "gt.json"
    if gt_path.exists():
        gt = json.loads(gt_path.read_text())
        program = SynthProgram.from_json(gt["program"])
        ops = [Extrusion.from_json(o) for o in gt["zone_ops"]]
    return Record(d.name, brep, zg, program, ops)


def list_models(data_dir) -> list:
    root = Path(data_dir)
    idx = root / INDEX
    if idx.exists():
        return json.loads(idx.read_text())["models"]
    return sorted(p.name for p in root.iterdir() if (p / "model.json").exists())


def iter_records(data_dir, start: int = 0, stop: Optional[int] = None) -> Iterator[Record]:
    root = Path(data_dir)
    for name in list_models(root)[start:stop]:
        yield load_record(root / name)
