"""Facial skin color correction for portrait photographs."""
from .pipeline import (PipelineConfig, PipelineError, RunReport, correct_headshot,
                       semiauto_correct, yearbook_generate)

__version__ = "0.1.0"

__all__ = ["PipelineConfig", "PipelineError", "RunReport", "correct_headshot",
           "semiauto_correct", "yearbook_generate"]
