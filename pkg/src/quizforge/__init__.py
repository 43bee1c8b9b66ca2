"""quizforge: build and evaluate Turkish educational quiz datasets."""

__version__ = "0.1.0"
