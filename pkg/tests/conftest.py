import asyncio

import httpx
import numpy as np
import pytest
from hypothesis import settings

from shiftscope.dist import OutcomeSpace, Pmf

settings.register_profile("suite", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("suite")


def random_pmf(rng: np.random.Generator, n: int, labels=None) -> Pmf:
    if labels is None:
        labels = [f"x{i:02d}" for i in range(n)]
    raw = rng.random(n) + 1e-9
    raw /= raw.sum()
    return Pmf(OutcomeSpace.from_labels(labels), tuple(float(v) for v in raw))


class ServiceClient:
    """Synchronous wrapper over the in-process ASGI app."""

    def __init__(self):
        from shiftscope.service import create_app

        self._app = create_app()

    def request(self, method: str, path: str, **kwargs) -> httpx.Response:
        async def go():
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://test", timeout=None
            ) as client:
                return await client.request(method, path, **kwargs)

        return asyncio.run(go())

    def get(self, path, **kwargs):
        return self.request("GET", path, **kwargs)

    def post(self, path, **kwargs):
        return self.request("POST", path, **kwargs)


@pytest.fixture(scope="session")
def service():
    return ServiceClient()
