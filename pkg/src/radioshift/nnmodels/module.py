"""Tiny module system: parameter/buffer registration and state dicts."""
from collections import OrderedDict

import numpy as np

from ..adcore import Parameter


class Module:
    def __init__(self):
        object.__setattr__(self, "_params", OrderedDict())
        object.__setattr__(self, "_buffers", OrderedDict())
        object.__setattr__(self, "_children", OrderedDict())

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self._params[name] = value
            if not value.name:
                value.name = name
        elif isinstance(value, Module):
            self._children[name] = value
        object.__setattr__(self, name, value)

    def register_buffer(self, name, value):
        self._buffers[name] = value
        object.__setattr__(self, name, value)

    def add_child(self, name, module):
        setattr(self, name, module)
        return module

    def named_parameters(self, prefix=""):
        out = [(prefix + k, p) for k, p in self._params.items()]
        for k, m in self._children.items():
            out.extend(m.named_parameters(f"{prefix}{k}."))
        return out

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix=""):
        out = [(prefix + k, b) for k, b in self._buffers.items()]
        for k, m in self._children.items():
            out.extend(m.named_buffers(f"{prefix}{k}."))
        return out

    def state_dict(self, prefix=""):
        sd = OrderedDict((k, p.data) for k, p in self.named_parameters(prefix))
        sd.update((k, b) for k, b in self.named_buffers(prefix))
        return sd

    def load_state_dict(self, sd, prefix=""):
        for k, p in self.named_parameters(prefix):
            if k not in sd:
                raise KeyError(f"missing parameter {k}")
            if tuple(np.shape(sd[k])) != p.shape:
                raise ValueError(f"{k}: shape {np.shape(sd[k])} != {p.shape}")
            p.data[...] = sd[k]
        for k, b in self.named_buffers(prefix):
            if k not in sd:
                raise KeyError(f"missing buffer {k}")
            b[...] = sd[k]

    def num_parameters(self):
        return int(sum(p.size for p in self.parameters()))

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None
