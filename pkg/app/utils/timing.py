"""
Timing and Performance Tracking Utilities
Provides millisecond-precision timing for verification checks
"""

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class TimingMetric:
    """Single timing measurement"""
    step_name: str
    duration_ms: float
    success: bool
    error: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)


class PerformanceTracker:
    """
    Tracks execution time for each step with millisecond precision

    Usage:
        tracker = PerformanceTracker()

        with tracker.track("finite_unit"):
            # run the check
            pass

        report = tracker.get_report()
    """

    def __init__(self):
        self.metrics: List[TimingMetric] = []
        self.start_time = time.perf_counter()

    @contextmanager
    def track(self, step_name: str, **metadata):
        """
        Context manager to track timing of a code block

        Args:
            step_name: Name of the step being tracked
            **metadata: Additional metadata to store
        """
        start = time.perf_counter()
        error = None
        success = True

        try:
            yield
        except Exception as e:
            error = str(e)
            success = False
            raise
        finally:
            duration_ms = (time.perf_counter() - start) * 1000
            self.metrics.append(TimingMetric(
                step_name=step_name,
                duration_ms=round(duration_ms, 2),
                success=success,
                error=error,
                metadata=metadata
            ))

    def get_total_time_ms(self) -> float:
        """Get total elapsed time since tracker creation"""
        return round((time.perf_counter() - self.start_time) * 1000, 2)

    def get_report(self) -> Dict[str, Any]:
        """
        Generate timing report

        Returns:
            Dictionary with total time and per-step durations
        """
        # Group by prefix (suite name)
        categories: Dict[str, Dict[str, Any]] = {}
        for metric in self.metrics:
            category = metric.step_name.split('_')[0]
            entry = categories.setdefault(category, {'total_ms': 0.0, 'count': 0})
            entry['total_ms'] = round(entry['total_ms'] + metric.duration_ms, 2)
            entry['count'] += 1

        return {
            'total_time_ms': self.get_total_time_ms(),
            'steps_count': len(self.metrics),
            'failed_steps': sum(1 for m in self.metrics if not m.success),
            'categories': categories,
            'steps': {m.step_name: m.duration_ms for m in self.metrics},
        }
