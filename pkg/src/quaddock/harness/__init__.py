"""Closed-loop trial harness: scenarios, batch runs, exports, plots and CLI."""
