"""
File formats
JSON interchange for operators, systems, observables, POVMs and map tables,
CSV export through pandas, and atomic file writes
"""

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, ValidationError

from app.config import Tolerances
from app.core.exceptions import InvalidObservable, InvalidOperator, InvalidPovm, QuantizationError
from app.core.groups import CarrierKind, GroupCarrier, SystemDescriptor, WeylSystem, build_system
from app.core.observables import ClassicalObservable, FunctionSpec
from app.core.operators import Effect, Operator
from app.core.povm import ComplexMeasureTable, OutcomePartition, Povm, SampleCounts
from app.core.quantization import MapTable, QuantizationKernel

PathLike = Union[str, Path]


# ============================================
# Low-level helpers
# ============================================

def write_atomic(path: PathLike, text: str) -> Path:
    """Write text to a temp file in the target directory, then rename over the target"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=str(target.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug(f"Wrote {target}")
    return target


def write_json(path: PathLike, payload: Any) -> Path:
    return write_atomic(path, json.dumps(payload, indent=2) + "\n")


def read_json(path: PathLike) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def complex_pairs(values: np.ndarray) -> List:
    """Nested [re, im] pairs for any complex array"""
    arr = np.asarray(values, dtype=np.complex128)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def from_pairs(data: Any) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise InvalidOperator("Complex values must be stored as [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


# ============================================
# Operators and systems
# ============================================

def operator_to_json(op: Operator) -> Dict[str, Any]:
    return {"dim": op.dim, "data": complex_pairs(op.entries)}


def operator_from_json(payload: Dict[str, Any]) -> Operator:
    if not isinstance(payload, dict) or "data" not in payload:
        raise InvalidOperator("Operator JSON needs a 'data' field")
    entries = from_pairs(payload["data"])
    if "dim" in payload and entries.shape != (payload["dim"], payload["dim"]):
        raise InvalidOperator(f"Operator data has shape {entries.shape}, declared dim {payload['dim']}")
    return Operator(entries)


def save_operator(path: PathLike, op: Operator) -> Path:
    return write_json(path, operator_to_json(op))


def load_operator(path: PathLike) -> Operator:
    return operator_from_json(read_json(path))


def load_kernel(path: PathLike, tolerances: Optional[Tolerances] = None) -> QuantizationKernel:
    """Kernel file is an Operator JSON that must pass the density gate"""
    return QuantizationKernel.from_operator(load_operator(path), tolerances)


def save_system(path: PathLike, system: WeylSystem) -> Path:
    return write_json(path, system.descriptor())


def load_system(path: PathLike, tolerances: Optional[Tolerances] = None) -> WeylSystem:
    return build_system(SystemDescriptor.model_validate(read_json(path)), tolerances)


def carrier_from_json(payload: Dict[str, Any]) -> GroupCarrier:
    descriptor = SystemDescriptor.model_validate(payload)
    if descriptor.kind == CarrierKind.FINITE_TORUS:
        return GroupCarrier(CarrierKind.FINITE_TORUS, modulus=descriptor.N)
    return GroupCarrier(CarrierKind.PLANAR_GRID, half_extent=descriptor.L, step=descriptor.h)


# ============================================
# Observables and function specs
# ============================================

def observable_to_json(f: ClassicalObservable) -> Dict[str, Any]:
    payload = {"carrier": f.carrier.descriptor(), "values": complex_pairs(f.values)}
    if f.declared_sup is not None:
        payload["declared_sup"] = f.declared_sup
    return payload


def observable_from_json(payload: Dict[str, Any]) -> ClassicalObservable:
    if "carrier" not in payload or "values" not in payload:
        raise InvalidObservable("Observable JSON needs 'carrier' and 'values'")
    return ClassicalObservable(carrier_from_json(payload["carrier"]), from_pairs(payload["values"]),
                               payload.get("declared_sup"))


BUILTIN_FAMILIES = ("one",)


def resolve_function(source: str, carrier: GroupCarrier) -> ClassicalObservable:
    """
    Observable from a CLI/HTTP function argument

    Accepts the builtin name "one", an inline FunctionSpec JSON object, or a
    path to a file holding either a FunctionSpec or an observable JSON.
    """
    if source in BUILTIN_FAMILIES:
        return FunctionSpec(family=source).on(carrier)
    text = source.strip()
    if text.startswith("{"):
        payload = json.loads(text)
    else:
        payload = read_json(source)
    return function_from_payload(payload, carrier)


def function_from_payload(payload: Dict[str, Any], carrier: GroupCarrier) -> ClassicalObservable:
    if "family" in payload:
        try:
            spec = FunctionSpec.model_validate(payload)
        except ValidationError as e:
            raise InvalidObservable(f"Invalid function spec: {e.errors()[0]['msg']}") from e
        return spec.on(carrier)
    f = observable_from_json(payload)
    f.require_carrier(carrier)
    return f


# ============================================
# POVMs and map tables
# ============================================

class CellRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    label: str
    indices: List[int]


def partition_to_json(partition: OutcomePartition) -> Dict[str, Any]:
    return {"cells": [{"label": label, "indices": idx.tolist()} for label, idx in partition.cells]}


def partition_from_json(payload: Dict[str, Any], carrier: GroupCarrier) -> OutcomePartition:
    cells = [CellRecord.model_validate(c) for c in payload.get("cells", [])]
    return OutcomePartition(carrier, tuple((c.label, np.asarray(c.indices)) for c in cells))


def povm_to_json(povm: Povm) -> Dict[str, Any]:
    return {
        "carrier": povm.carrier.descriptor(),
        "partition": partition_to_json(povm.partition),
        "effects": [operator_to_json(e.op) for e in povm.effects],
        "d": povm.d_const,
    }


def povm_from_json(payload: Dict[str, Any], tolerances: Optional[Tolerances] = None) -> Povm:
    try:
        carrier = carrier_from_json(payload["carrier"])
        partition = partition_from_json(payload["partition"], carrier)
        effects = tuple(Effect(operator_from_json(e), tolerances) for e in payload["effects"])
        d_const = float(payload["d"])
    except KeyError as e:
        raise InvalidPovm(f"POVM JSON misses field {e}") from e
    if tolerances is None:
        return Povm(partition, effects, d_const)
    return Povm(partition, effects, d_const, tolerances=tolerances)


def map_table_to_json(table: MapTable) -> Dict[str, Any]:
    return {
        "carrier": table.carrier.descriptor(),
        "entries": [operator_to_json(Operator(m)) for m in table.entries],
    }


def map_table_from_json(payload: Dict[str, Any]) -> MapTable:
    carrier = carrier_from_json(payload["carrier"])
    entries = np.stack([operator_from_json(e).entries for e in payload["entries"]], axis=0)
    return MapTable(carrier, entries)


def load_table_or_povm(path: PathLike, tolerances: Optional[Tolerances] = None) -> Union[MapTable, Povm]:
    """Map table or POVM file, told apart by their fields"""
    payload = read_json(path)
    if "effects" in payload:
        return povm_from_json(payload, tolerances)
    if "entries" in payload:
        return map_table_from_json(payload)
    raise QuantizationError(f"{path} is neither a POVM nor a map table")


# ============================================
# CSV exports
# ============================================

def grid_frame(carrier: GroupCarrier, values: np.ndarray) -> pd.DataFrame:
    """Plot-ready frame with columns index, q, p, value_re, value_im"""
    coords = carrier.coordinates()
    values = np.asarray(values, dtype=np.complex128)
    return pd.DataFrame({
        "index": np.arange(carrier.size),
        "q": coords[:, 0],
        "p": coords[:, 1],
        "value_re": values.real,
        "value_im": values.imag,
    })


def save_grid_csv(path: PathLike, source: Union[ClassicalObservable, ComplexMeasureTable]) -> Path:
    frame = grid_frame(source.carrier, source.values)
    return write_atomic(path, frame.to_csv(index=False, float_format="%.17g"))


def counts_frame(counts: SampleCounts) -> pd.DataFrame:
    return pd.DataFrame({"label": counts.labels, "count": counts.counts})


def save_counts_csv(path: PathLike, counts: SampleCounts) -> Path:
    return write_atomic(path, counts_frame(counts).to_csv(index=False))


def load_counts_csv(path: PathLike) -> SampleCounts:
    frame = pd.read_csv(path, dtype={"label": str, "count": int})
    return SampleCounts(frame["label"].tolist(), frame["count"].astype(int).tolist())
