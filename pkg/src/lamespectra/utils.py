"""
utility functions
"""

import json
import os

import numpy as np
import pandas as pd


class CustomJSONEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, np.bool_):
            return bool(obj)
        elif isinstance(obj, (complex, np.complexfloating)):
            return {'re': float(obj.real), 'im': float(obj.imag)}
        elif isinstance(obj, np.ndarray):
            if np.iscomplexobj(obj):
                return {
                    're': [float(x) for x in obj.real.ravel()],
                    'im': [float(x) for x in obj.imag.ravel()],
                }
            return obj.tolist()
        elif isinstance(obj, (set, tuple)):
            return list(obj)
        elif hasattr(obj, 'to_dict'):
            return obj.to_dict()
        else:
            return super(CustomJSONEncoder, self).default(obj)


def json_dumps(content):
    """sorted keys and a fixed indent, so identical content gives identical bytes"""
    return json.dumps(content, cls=CustomJSONEncoder, sort_keys=True, indent=2) + '\n'


def write_json(content, outfile):
    """
    save a JSON-serializable structure

    parameters:
    -----------
    content: dict or list, may contain numpy values and complex numbers
    outfile: string, filename to save to
    """
    os.makedirs(os.path.dirname(os.path.abspath(outfile)), exist_ok=True)
    with open(outfile, 'w') as f:
        f.write(json_dumps(content))


def read_json(infile):
    with open(infile) as f:
        return json.load(f)


def write_csv(df, outfile):
    os.makedirs(os.path.dirname(os.path.abspath(outfile)), exist_ok=True)
    df.to_csv(outfile, index=False, float_format='%.17g')


def points_frame(points, **columns):
    """x, y columns for a complex point set, plus constant label columns"""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    df = pd.DataFrame({'x': points.real, 'y': points.imag})
    for name, value in columns.items():
        df[name] = value
    return df


def cpu_threads(env_value=None, limit=4):
    """worker pool size: the override if given, else min(limit, cpu count)"""
    if env_value:
        threads = int(env_value)
        if threads < 1:
            raise ValueError(f'thread count must be >= 1, got {threads}')
        return threads
    return max(1, min(limit, os.cpu_count() or 1))
