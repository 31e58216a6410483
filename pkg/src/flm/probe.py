"""Generate training sets by querying a black-box predictor.

Two endpoint flavors: an in-process analytic predictor (a term superposition
evaluated with the library quadrature; a deterministic stand-in for a trained
network) and an external process speaking probe protocol v1 over its standard
streams.

Probe protocol v1 (newline-delimited JSON, UTF-8):
    server banner:  {"protocol":"flm-probe","version":1,"task":"image_to_scalar"}
    request:        {"id":1,"nx":28,"ny":28,"input":[...]}
    response:       {"id":1,"output":[...]}
Requests are serial; response ids must match, in order. The client closes the
server's input stream to shut it down.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int
from .errors import DataFormatError, ProbeError, TaskMismatchError
from .fields import Dataset, Grid2D, TaskKind
from .model import FunctionalLinearModel, predict_batch
from .synth import SamplerSpec

PROTOCOL_NAME = "flm-probe"
PROTOCOL_VERSION = 1


@dataclass(frozen=True)
class ProbePlan:
    """How to sample inputs: task shape, grid, count, seed, sampler.

    Global surrogates probe across the full parameter ranges; a local
    interpretation collapses all but one range to a point (for example a
    100-draw sweep over a single generator parameter with the others fixed)
    by passing degenerate [v, v] intervals in the sampler ranges.
    """

    task: TaskKind
    nx: int
    ny: int
    q: int
    seed: int
    sampler: SamplerSpec = field(default_factory=lambda: SamplerSpec("smooth"))
    out_n: int | None = None  # line-task output length; defaults to nx

    def __post_init__(self):
        check_positive_int(self.q, "q")

    @property
    def grid(self) -> Grid2D:
        return Grid2D(self.nx, self.ny)

    def expected_out_n(self) -> int | None:
        if self.task is TaskKind.IMAGE_TO_SCALAR:
            return 1
        if self.task is TaskKind.IMAGE_TO_IMAGE:
            return self.nx * self.ny
        return self.out_n or self.nx


@dataclass(frozen=True)
class InProcessAnalytic:
    """Endpoint backed by a term superposition on the library quadrature."""

    model: FunctionalLinearModel

    @property
    def task(self) -> TaskKind:
        return self.model.task


@dataclass(frozen=True)
class ExternalProcess:
    """Endpoint backed by a child process speaking probe protocol v1."""

    argv: tuple[str, ...]
    cwd: str | None = None
    timeout: float = 30.0

    def __post_init__(self):
        if not self.argv:
            raise DataFormatError("external endpoint needs a command line")
        if not (self.timeout > 0):
            raise DataFormatError("timeout must be positive")


def builtin_analytic_predictor(terms, coeffs) -> InProcessAnalytic:
    """Endpoint whose response to any field equals the coefficient-weighted
    term sum, computed with the same quadrature as the library."""
    from .model import from_solution

    if not terms:
        raise DataFormatError("analytic predictor needs at least one term")
    grid = Grid2D(2, 2)  # placeholder; prediction uses the probed field's grid
    model = from_solution(list(terms), np.asarray(coeffs, dtype=np.float64),
                          grid, norm=None)
    return InProcessAnalytic(model=model)


class _ProbeSession:
    """One serial request/response session with an external process."""

    def __init__(self, endpoint: ExternalProcess):
        self.endpoint = endpoint
        try:
            self.proc = subprocess.Popen(
                list(endpoint.argv),
                cwd=endpoint.cwd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                encoding="utf-8",
            )
        except OSError as exc:
            raise ProbeError(f"cannot start endpoint {endpoint.argv}: {exc}") from exc
        self.lines: queue.Queue = queue.Queue()
        self.reader = threading.Thread(target=self._pump, daemon=True)
        self.reader.start()

    def _pump(self):
        try:
            for line in self.proc.stdout:
                self.lines.put(line)
        finally:
            self.lines.put(None)

    def read_json(self, what: str) -> dict:
        try:
            line = self.lines.get(timeout=self.endpoint.timeout)
        except queue.Empty:
            raise ProbeError(f"timeout waiting for {what}") from None
        if line is None:
            raise ProbeError(f"endpoint closed its output before {what}")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProbeError(f"malformed {what}: {line!r}") from exc
        if not isinstance(obj, dict):
            raise ProbeError(f"malformed {what}: expected an object")
        return obj

    def send(self, obj: dict):
        try:
            self.proc.stdin.write(json.dumps(obj) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProbeError(f"endpoint died while sending request: {exc}") from exc

    def close(self):
        try:
            if self.proc.stdin:
                self.proc.stdin.close()
            self.proc.wait(timeout=self.endpoint.timeout)
        except Exception:
            self.proc.kill()
        finally:
            if self.proc.poll() is None:
                self.proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def handshake(session: _ProbeSession) -> dict:
    """Validate the protocol banner and return it."""
    banner = session.read_json("handshake banner")
    if banner.get("protocol") != PROTOCOL_NAME:
        raise ProbeError(f"bad protocol name in banner: {banner!r}")
    if banner.get("version") != PROTOCOL_VERSION:
        raise ProbeError(
            f"unsupported protocol version {banner.get('version')!r}"
        )
    try:
        TaskKind.from_name(banner.get("task"))
    except DataFormatError as exc:
        raise ProbeError(f"banner task invalid: {exc}") from exc
    return banner


def _draw_inputs(plan: ProbePlan) -> np.ndarray:
    rng = np.random.default_rng(plan.seed)
    grid = plan.grid
    return np.stack(
        [plan.sampler.draw(rng, grid).values for _ in range(plan.q)]
    )


def _check_output(vec, expected_n: int | None, request_id: int) -> np.ndarray:
    try:
        arr = np.asarray(vec, dtype=np.float64).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ProbeError(f"request {request_id}: malformed output: {exc}") from exc
    if expected_n is not None and arr.shape[0] != expected_n:
        raise ProbeError(
            f"request {request_id}: output length {arr.shape[0]}, "
            f"expected {expected_n}"
        )
    if not np.all(np.isfinite(arr)):
        raise ProbeError(f"request {request_id}: non-finite output")
    return arr


def probe(endpoint, plan: ProbePlan) -> Dataset:
    """Query the endpoint on sampled inputs and return the (input, output)
    pairs as a dataset. Bit-reproducible for a fixed seed and deterministic
    endpoint."""
    inputs = _draw_inputs(plan)
    if isinstance(endpoint, InProcessAnalytic):
        if endpoint.task is not plan.task:
            raise TaskMismatchError(
                f"plan task {plan.task.value} != predictor task "
                f"{endpoint.task.value}"
            )
        out_shape = None
        if plan.task is TaskKind.IMAGE_TO_LINE:
            out_shape = plan.expected_out_n()
        outputs = predict_batch(endpoint.model, inputs, plan.grid, out_shape)
        return Dataset(task=plan.task, grid=plan.grid, inputs=inputs,
                       outputs=outputs)
    if not isinstance(endpoint, ExternalProcess):
        raise DataFormatError(f"unknown endpoint type {type(endpoint).__name__}")

    expected_n = plan.expected_out_n()
    outputs = np.empty((plan.q, expected_n))
    with _ProbeSession(endpoint) as session:
        banner = handshake(session)
        if banner["task"] != plan.task.value:
            raise ProbeError(
                f"endpoint serves task {banner['task']!r}, plan wants "
                f"{plan.task.value!r}"
            )
        for i in range(plan.q):
            request_id = i + 1
            try:
                session.send(
                    {
                        "id": request_id,
                        "nx": plan.nx,
                        "ny": plan.ny,
                        "input": inputs[i].tolist(),
                    }
                )
                reply = session.read_json(f"response {request_id}")
            except ProbeError as exc:
                raise ProbeError(
                    f"{exc} (last good id {request_id - 1})"
                ) from exc
            if "error" in reply:
                raise ProbeError(
                    f"request {request_id}: endpoint error: {reply['error']}"
                )
            if reply.get("id") != request_id:
                raise ProbeError(
                    f"out-of-order response: got id {reply.get('id')!r}, "
                    f"expected {request_id}"
                )
            if "output" not in reply:
                raise ProbeError(f"request {request_id}: response lacks output")
            outputs[i] = _check_output(reply["output"], expected_n, request_id)
    return Dataset(task=plan.task, grid=plan.grid, inputs=inputs, outputs=outputs)
