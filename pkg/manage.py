#!/usr/bin/env python
"""
Entry point of the lab commands: sweep, er, collapse, variance, gaps,
resolvent, chatterjee, generate and quantiles.
"""
import os
import sys


def main():
	os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'project.settings')

	from django.core.management import execute_from_command_line

	execute_from_command_line(sys.argv)


if __name__ == '__main__':
	main()
