"""Scenarios, experiment runner, plotting and the command line front end."""
