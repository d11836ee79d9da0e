import pytest
from fastapi.testclient import TestClient

from rirag_service import ServiceConfig, create_app


@pytest.fixture(scope="session")
def client():
    with TestClient(create_app(ServiceConfig(backend="stub"))) as c:
        yield c
