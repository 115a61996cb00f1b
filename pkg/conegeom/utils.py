import argparse
import dataclasses
import json
import math
from pathlib import Path
from typing import Any, List, Optional, Union

import mpmath
import numpy as np
import pandas as pd

from conegeom.config import default_grids
from conegeom.enums import OmegaRoute, Subcommand


def parse_grid(spec: Union[str, List[float]]) -> List[float]:
    """Parses 'start:stop:geometric' (doubling), 'start:stop:count' (linear) or 'a,b,c' grids."""
    if not isinstance(spec, str):
        return [float(x) for x in spec]
    if ':' not in spec:
        return parse_floats(spec)
    start, stop, kind = spec.split(':')
    start, stop = float(start), float(stop)
    if kind == 'geometric':
        count = int(round(math.log2(stop / start))) + 1
        return [start * 2.0 ** k for k in range(count)]
    return np.linspace(start, stop, int(kind)).tolist()


def parse_floats(text: str) -> List[float]:
    return [float(x) for x in text.split(',') if x.strip()]


def default_p_grid() -> List[float]:
    return parse_grid(default_grids()['p'])


def to_jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(obj.to_dict() if hasattr(obj, 'to_dict') else dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, mpmath.mpf):
        return mpmath.nstr(obj, 30)
    if isinstance(obj, pd.DataFrame):
        return obj.to_dict(orient='records')
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_json(path: Union[str, Path], data: Any) -> None:
    path = Path(path)
    if not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        f.write(json.dumps(to_jsonable(data), indent=2))


def write_csv(path: Union[str, Path], frame: pd.DataFrame, header: Optional[str] = None) -> None:
    """Writes `frame` with a leading '# ...' line describing the columns."""
    path = Path(path)
    if not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        if header:
            f.write(f"# {header}\n")
        frame.to_csv(f, index=False, float_format='%.17g')


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog='conegeom',
                                     description='Affine invariants of convex bodies, checked numerically.')
    parser.add_argument('subcommand',
                        type=str,
                        choices=[x.value for x in Subcommand])
    parser.add_argument('--body',
                        type=str,
                        action='append',
                        default=None,
                        help='body config as JSON, repeatable')
    parser.add_argument('--config',
                        type=str,
                        default=None,
                        help='YAML/JSON experiment config file')
    parser.add_argument('--routes',
                        type=str,
                        default=None,
                        help='comma separated, from ' + ','.join(x.value for x in OmegaRoute))
    parser.add_argument('--p-grid', type=str, default=None, help="e.g. '16:16384:geometric'")
    parser.add_argument('--delta-grid', type=str, default=None)
    parser.add_argument('--n', type=str, default=None, help='dimensions, comma separated')
    parser.add_argument('--r', type=str, default=None, help='l_r exponents, comma separated')
    parser.add_argument('--a', type=str, default=None, help='weights for the appendix table')
    parser.add_argument('--caps', type=int, default=None, help='number of caps')
    parser.add_argument('--tol', type=float, default=None, help='sphere quadrature tolerance')
    parser.add_argument('--mc', type=float, default=None, help='Monte Carlo samples')
    parser.add_argument('--seed', type=int, default=None, help='random seed')
    parser.add_argument('--threads', type=int, default=None, help='worker threads')
    parser.add_argument('--out', type=str, default=None, help='output file or directory')
    parser.add_argument('--verbose', action='store_true')
    return parser.parse_args(argv)
