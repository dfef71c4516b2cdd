"""JSON rendering of protocol values: integers as hex, dataclasses as tagged objects."""
import dataclasses
import json


def to_jsonable(obj):
    if obj is None or isinstance(obj, (bool, str, float)):
        return obj
    if isinstance(obj, int):
        return hex(obj)
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if dataclasses.is_dataclass(obj):
        out = {"type": type(obj).__name__}
        for f in dataclasses.fields(obj):
            if f.compare is False:
                continue
            out[f.name] = to_jsonable(getattr(obj, f.name))
        return out
    if isinstance(obj, (tuple, list)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, bytes):
        return obj.hex()
    raise TypeError(f"cannot render {type(obj).__name__}")


def dumps(obj, **kw):
    return json.dumps(obj, sort_keys=True, **kw)


def trace_lines(trace):
    return "\n".join(dumps(e.to_json()) for e in trace)
