"""
Django command to wait for the run registry database to be available.
"""

import time
from typing import Any

from django.core.management.base import BaseCommand, CommandError
from django.db.utils import OperationalError
from psycopg2 import OperationalError as Psycopg2Error


class Command(BaseCommand):
    """Django command to wait for database."""

    help = "Block until the default database accepts connections."

    def add_arguments(self, parser) -> None:
        parser.add_argument("--interval", type=float, default=1.0, help="Seconds between attempts.")
        parser.add_argument(
            "--timeout", type=float, default=0.0, help="Give up after this many seconds; 0 waits forever."
        )

    def handle(self, *args: Any, **options: Any) -> str | None:
        """Entrypoint for command."""
        self.stdout.write("Waiting for database...")
        interval, timeout = options["interval"], options["timeout"]
        waited = 0.0
        while True:
            try:
                self.check(databases=["default"])
                break
            except (Psycopg2Error, OperationalError):
                if timeout and waited >= timeout:
                    raise CommandError(f"Database unavailable after {waited:g} seconds.")
                self.stdout.write(f"Database unavailable, waiting {interval:g} second(s)...")
                time.sleep(interval)
                waited += interval

        self.stdout.write(self.style.SUCCESS("Database available!"))
