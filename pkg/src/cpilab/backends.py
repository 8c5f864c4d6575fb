"""Measurement backends that produce PSI samples for a network point.

Three implementations share one interface: a synthetic closed-form surface
(optionally noisy), replay of a recorded measurement grid, and invocation
of an external command that wraps the user's traffic shaping and page-load
harness.
"""

from __future__ import annotations

import math
import os
import subprocess
import threading
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .model import NetPoint, PsiSample

DEFAULT_TRIALS = 7
DEFAULT_COMMAND_TIMEOUT_S = 300.0

# Gaussian noise can push a sample of a small surface value below zero;
# samples are floored here because PSI is positive by definition.
_MIN_PSI = 1e-9


class BackendError(Exception):
    """Base class for measurement failures."""


class MissingGridPoint(BackendError):
    """A replay lookup hit a point the recording does not contain."""

    def __init__(self, point: NetPoint):
        self.point = point
        super().__init__(
            f"replay grid has no entry for latency={point.latency_ms} ms, "
            f"bandwidth={point.bandwidth_kbps} Kbps (incomplete recording)"
        )


class CommandFailure(BackendError):
    """The external measurement command failed or spoke the wrong protocol."""

    def __init__(self, message: str, stderr: str = ""):
        self.stderr = stderr
        if stderr.strip():
            message = f"{message} [stderr: {stderr.strip()}]"
        super().__init__(message)


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str  # synthetic | replay | external
    concurrency_safe: bool
    trials_default: int = DEFAULT_TRIALS


class PsiBackend(Protocol):
    @property
    def descriptor(self) -> BackendDescriptor: ...

    def measure(self, point: NetPoint, trials: int) -> PsiSample: ...


class SyntheticBackend:
    """Closed-form PSI surface: base + lat_coeff * latency + bw_coeff / bandwidth.

    With positive coefficients the noiseless surface is strictly increasing
    in latency and strictly decreasing in bandwidth. Noise is Gaussian with
    a per-backend seeded generator, so an identical call sequence on an
    identically seeded backend reproduces the same sample stream.
    """

    def __init__(self, base=0.0, lat_coeff=0.0, bw_coeff=0.0, noise_stddev=0.0, seed=0):
        if noise_stddev < 0:
            raise ValueError("noise_stddev must be >= 0")
        self.base = float(base)
        self.lat_coeff = float(lat_coeff)
        self.bw_coeff = float(bw_coeff)
        self.noise_stddev = float(noise_stddev)
        self.seed = int(seed)
        self._rng = np.random.default_rng(self.seed)

    @property
    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor("synthetic", concurrency_safe=True)

    def surface_value(self, point: NetPoint) -> float:
        return self.base + self.lat_coeff * point.latency_ms + self.bw_coeff / point.bandwidth_kbps

    def measure(self, point: NetPoint, trials: int) -> PsiSample:
        if trials < 1:
            raise ValueError("trials must be >= 1")
        value = self.surface_value(point)
        if self.noise_stddev == 0:
            samples = [value] * trials
        else:
            noise = self._rng.normal(0.0, self.noise_stddev, size=trials)
            samples = [max(value + n, _MIN_PSI) for n in noise]
        return PsiSample.from_samples(point, samples)


class ReplayGridBackend:
    """Replays recorded samples keyed by exact (latency, bandwidth) pairs.

    Keys never interpolate: a lookup off the recorded grid raises
    :class:`MissingGridPoint` so incomplete recordings fail loudly instead
    of silently flipping greedy decisions. A recording may hold fewer trials
    per point than requested; the recorded samples are then used as-is.
    """

    def __init__(self, site_id: str, entries):
        self.site_id = site_id
        self.entries: dict[tuple[float, float], list[float]] = {}
        for key, samples in dict(entries).items():
            lat, bw = key
            samples = [float(s) for s in samples]
            if not samples:
                raise ValueError(f"grid entry {key} has no samples")
            self.entries[(float(lat), float(bw))] = samples
        if not self.entries:
            raise ValueError("replay grid is empty")

    @property
    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor("replay", concurrency_safe=True)

    def measure(self, point: NetPoint, trials: int) -> PsiSample:
        if trials < 1:
            raise ValueError("trials must be >= 1")
        key = (point.latency_ms, point.bandwidth_kbps)
        if key not in self.entries:
            raise MissingGridPoint(point)
        return PsiSample.from_samples(point, self.entries[key][:trials])


def _decimal(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def invoke_external(point: NetPoint, command_template: str,
                    timeout_s: float = DEFAULT_COMMAND_TIMEOUT_S) -> float:
    """Run a shell command under CPI_LATENCY_MS / CPI_BANDWIDTH_KBPS and
    parse the last non-empty stdout line as a PSI value.

    The command is expected to shape the link to the given conditions, load
    the page, and print the resulting PSI last. Nonzero exit, timeout, or
    an unusable final line raise :class:`CommandFailure` with captured
    stderr attached.
    """
    if not command_template:
        raise ValueError("command_template must be non-empty")
    env = dict(os.environ)
    env["CPI_LATENCY_MS"] = _decimal(point.latency_ms)
    env["CPI_BANDWIDTH_KBPS"] = _decimal(point.bandwidth_kbps)
    try:
        proc = subprocess.run(
            command_template, shell=True, env=env,
            capture_output=True, text=True, timeout=timeout_s,
        )
    except subprocess.TimeoutExpired as exc:
        stderr = exc.stderr.decode() if isinstance(exc.stderr, bytes) else (exc.stderr or "")
        raise CommandFailure(f"command timed out after {timeout_s} s", stderr) from exc
    if proc.returncode != 0:
        raise CommandFailure(f"command exited with status {proc.returncode}", proc.stderr)
    lines = [line.strip() for line in proc.stdout.splitlines() if line.strip()]
    if not lines:
        raise CommandFailure("command produced no stdout", proc.stderr)
    try:
        value = float(lines[-1])
    except ValueError:
        raise CommandFailure(f"final stdout line is not a number: {lines[-1]!r}", proc.stderr) from None
    if not (value > 0 and math.isfinite(value)):
        raise CommandFailure(f"PSI must be finite and > 0, command printed {value}", proc.stderr)
    return value


class ExternalCommandBackend:
    """Measures by invoking a user-supplied shell command per trial.

    Invocations are serialized through a lock because the command typically
    reconfigures a shared emulated link; set ``concurrency_safe=True`` only
    when the harness is known to tolerate concurrent runs.
    """

    def __init__(self, command: str, timeout_s: float = DEFAULT_COMMAND_TIMEOUT_S,
                 concurrency_safe: bool = False):
        if not command:
            raise ValueError("command must be non-empty")
        if timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        self.command = command
        self.timeout_s = float(timeout_s)
        self._concurrency_safe = concurrency_safe
        self._lock = threading.Lock()

    @property
    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor("external", concurrency_safe=self._concurrency_safe)

    def measure(self, point: NetPoint, trials: int) -> PsiSample:
        if trials < 1:
            raise ValueError("trials must be >= 1")
        with self._lock:
            samples = [invoke_external(point, self.command, self.timeout_s) for _ in range(trials)]
        return PsiSample.from_samples(point, samples)
