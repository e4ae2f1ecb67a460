"""
HTTP tool service exposing the retrieval toolkit to external agents.

Tool-level failures (unknown node, empty query, unknown type) come back as HTTP 200 with
status="error"; malformed request bodies are rejected by FastAPI with 422.
"""

import platform
import socket
from typing import Any, Dict, List, Optional

from fastapi import FastAPI
from pydantic import BaseModel, Field

from kgscout_shared import get_clean_logger
from kgscout_agent import GLOBAL_SEARCH, NEIGHBORS, Toolkit


class GlobalSearchRequest(BaseModel):
    q: Optional[str] = None
    k: Optional[int] = None


class NeighborsRequest(BaseModel):
    v: Optional[str] = None
    q: Optional[str] = None
    node_types: Optional[List[str]] = None
    relation_types: Optional[List[str]] = None


class ToolResponse(BaseModel):
    tool: str
    status: str
    results: List[Dict[str, Any]] = Field(default_factory=list)
    error: Optional[str] = None


def create_app(toolkit: Toolkit, logger=None) -> FastAPI:
    logger = get_clean_logger("service", logger)
    app = FastAPI(title="kgscout tool service", version="0.1.0")

    def run_tool(name: str, request: BaseModel) -> ToolResponse:
        result = toolkit.execute(name, request.model_dump(exclude_none=True))
        logger.debug(f"{name} -> {result.status} ({len(result.results)} results)")
        return ToolResponse(**result.to_dict())

    # sync handlers run in the threadpool, so requests are served concurrently
    @app.post("/tools/global_search", response_model=ToolResponse, response_model_exclude_none=True)
    def global_search(request: GlobalSearchRequest) -> ToolResponse:
        return run_tool(GLOBAL_SEARCH, request)

    @app.post("/tools/neighbors", response_model=ToolResponse, response_model_exclude_none=True)
    def neighbors(request: NeighborsRequest) -> ToolResponse:
        return run_tool(NEIGHBORS, request)

    @app.get("/tools/schema")
    def schema() -> Dict[str, Any]:
        return {"tools": toolkit.tool_schemas()}

    @app.get("/health")
    def health() -> Dict[str, Any]:
        return {"status": "ok", "graph": toolkit.graph.name, "stats": toolkit.graph.stats().to_dict()}

    return app


def is_port_free(host: str, port: int) -> bool:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            probe.bind((host, port))
        except OSError:
            return False
    return True


def get_port_check_instructions(port: int) -> str:
    """Get instructions for checking which process is using a port based on OS"""
    system = platform.system().lower()

    if system == "darwin":  # macOS
        return f"""Port {port} is busy. To check which process is using it on macOS:
  lsof -i :{port}
  netstat -an | grep :{port}"""

    elif system == "windows":
        return f"""Port {port} is busy. To check which process is using it on Windows:
  netstat -ano | findstr :{port}
  Get-NetTCPConnection -LocalPort {port}  # PowerShell"""

    else:
        return f"""Port {port} is busy. To check which process is using it on Linux:
  lsof -i :{port}
  ss -tulpn | grep :{port}"""
