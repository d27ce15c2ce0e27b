"""
GMM 스냅샷
==========
<QQd {K, P, σ²} 뒤에 성분마다 π, μ (P), 고유값 (P), 고유벡터 (P×P, row-major), 모두 little-endian f64.
σ² > 0 이면 저랭크 모델(LowRankGmm), 0 이면 일반 GMM 으로 읽는다.
"""
import struct
from pathlib import Path

import numpy as np

from exceptions.common import ServiceException
from models.mixture import GmmModel, LowRankGmm
from repositories.base_repository import BaseRepository

HEADER = struct.Struct("<QQd")


def encode_snapshot(model: GmmModel) -> bytes:
    sigma2 = model.noise_variance if isinstance(model, LowRankGmm) else 0.0
    chunks = [HEADER.pack(model.k, model.dim, sigma2)]
    for k in range(model.k):
        chunks.append(
            np.concatenate(
                [
                    [model.weights[k]],
                    model.means[k],
                    model.eigvals[k],
                    model.eigvecs[k].reshape(-1),
                ]
            ).astype("<f8").tobytes()
        )
    return b"".join(chunks)


def decode_snapshot(data: bytes) -> GmmModel:
    if len(data) < HEADER.size:
        raise ServiceException.truncated_file("GMM 스냅샷 헤더가 잘렸습니다")
    k, dim, sigma2 = HEADER.unpack_from(data)
    if k < 1 or dim < 1:
        raise ServiceException.header_parse(f"잘못된 GMM 스냅샷 헤더: K={k}, P={dim}")
    per_component = 1 + 2 * dim + dim * dim
    expected = HEADER.size + 8 * k * per_component
    if len(data) < expected:
        raise ServiceException.truncated_file(
            f"GMM 스냅샷이 잘렸습니다 (기대 {expected} 바이트, 실제 {len(data)})"
        )
    if len(data) > expected:
        raise ServiceException.header_parse("GMM 스냅샷 뒤에 남는 바이트가 있습니다")

    body = np.frombuffer(data, dtype="<f8", offset=HEADER.size).astype(np.float64)
    body = body.reshape(k, per_component)
    weights = body[:, 0]
    means = body[:, 1: 1 + dim]
    eigvals = body[:, 1 + dim: 1 + 2 * dim]
    eigvecs = body[:, 1 + 2 * dim:].reshape(k, dim, dim)
    if not np.all(np.isfinite(body)):
        raise ServiceException.non_finite("GMM 스냅샷")
    covariances = np.einsum("kij,kj,klj->kil", eigvecs, eigvals, eigvecs)

    fields = dict(
        weights=weights.copy(),
        means=means.copy(),
        covariances=covariances,
        eigvals=eigvals.copy(),
        eigvecs=eigvecs.copy(),
    )
    if sigma2 > 0:
        ranks = np.maximum(np.count_nonzero(eigvals > 0, axis=1), 1)
        return LowRankGmm(**fields, ranks=ranks, noise_variance=float(sigma2))
    return GmmModel(**fields)


class ModelRepository(BaseRepository[GmmModel]):
    kind = "GMM 스냅샷"

    def _read(self, path: Path) -> GmmModel:
        return decode_snapshot(path.read_bytes())

    def _write(self, obj: GmmModel) -> bytes:
        return encode_snapshot(obj)
