"""Chain checkpoint files.

Layout: an ASCII header of ``key=value`` lines opened by ``MDCT-CHAIN 1`` and
closed by ``END``, then ``records`` little-endian float64 records. Each record
holds, in order::

    gamma[p]  sigma2  beta[n_basis]  delta1  delta[n_basis - J(1)]  eta

``beta`` and ``delta`` are resolution-major; ``delta`` skips resolution 1.
Wall-clock timings are not stored so identical runs give identical files.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .grid import DomainBox, MultiresGrid, build_grid
from .sampler import ChainSamples, Hyperparams

MAGIC = "MDCT-CHAIN 1"


def _fmt(values) -> str:
    return ",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in values)


def write_chain(path, chain: ChainSamples, grid: MultiresGrid, hyper: Hyperparams, n_iter: int | None = None) -> None:
    L, p = chain.gamma.shape
    nd = chain.delta.shape[1]
    meta = {
        "seed": chain.seed,
        "mode": chain.mode,
        "family": chain.family,
        "n_iter": len(chain.iter_times) if n_iter is None else n_iter,
        "burn_in": chain.burn_in,
        "thin": chain.thin,
        "box": _fmt(grid.box.flat()),
        "R": grid.R,
        "J1": _fmt(grid.J1_dims),
        "c": repr(float(hyper.c)),
        "a_sigma": repr(float(hyper.a_sigma)),
        "b_sigma": repr(float(hyper.b_sigma)),
        "h_eta": hyper.h_eta,
        "p": p,
        "n_basis": grid.n_basis,
        "n_delta": nd,
        "records": L,
        "fields": f"gamma[{p}] sigma2 beta[{grid.n_basis}] delta1 delta[{nd}] eta",
    }
    rec = np.column_stack([
        chain.gamma, chain.sigma2[:, None], chain.beta, chain.delta1[:, None],
        chain.delta, chain.eta[:, None].astype(float),
    ]) if L else np.zeros((0, p + grid.n_basis + nd + 3))
    with open(path, "wb") as fh:
        fh.write((MAGIC + "\n").encode())
        for k, v in meta.items():
            fh.write(f"{k}={v}\n".encode())
        fh.write(b"END\n")
        fh.write(np.ascontiguousarray(rec, dtype="<f8").tobytes())


def read_header(path) -> tuple[dict, int]:
    meta = {}
    with open(path, "rb") as fh:
        first = fh.readline().decode(errors="replace").strip()
        if first != MAGIC:
            raise DataError(f"{path} is not a chain file")
        while True:
            line = fh.readline()
            if not line:
                raise DataError(f"{path}: header not terminated")
            text = line.decode().strip()
            if text == "END":
                return meta, fh.tell()
            key, _, value = text.partition("=")
            meta[key] = value


def read_chain(path) -> tuple[ChainSamples, MultiresGrid, Hyperparams]:
    meta, offset = read_header(path)
    with open(path, "rb") as fh:
        fh.seek(offset)
        raw = np.frombuffer(fh.read(), dtype="<f8")
    p, N, nd, L = (int(meta[k]) for k in ("p", "n_basis", "n_delta", "records"))
    width = p + N + nd + 3
    if raw.size != L * width:
        raise DataError(f"{path}: expected {L} records of {width} values, found {raw.size} values")
    rec = raw.reshape(L, width)
    box = DomainBox.from_flat([float(v) for v in meta["box"].split(",")])
    grid = build_grid(box, int(meta["R"]), [int(v) for v in meta["J1"].split(",")])
    hyper = Hyperparams(float(meta["c"]), float(meta["a_sigma"]), float(meta["b_sigma"]), int(meta["h_eta"]))
    i = 0
    def take(k):
        nonlocal i
        out = rec[:, i:i + k]
        i += k
        return out
    chain = ChainSamples(
        gamma=take(p).copy(), sigma2=take(1)[:, 0].copy(), beta=take(N).copy(),
        delta1=take(1)[:, 0].copy(), delta=take(nd).copy(), eta=take(1)[:, 0].astype(np.int64),
        iter_times=np.zeros(0), burn_in=int(meta["burn_in"]), thin=int(meta["thin"]),
        seed=int(meta["seed"]), mode=meta["mode"], family=meta["family"],
    )
    return chain, grid, hyper
