import json
from pathlib import Path

from django.core.management import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from tensor_core.exceptions import ActionHeadError


def read_json(path) -> dict:
    try:
        with open(path) as stream:
            return json.load(stream)
    except FileNotFoundError as error:
        raise CommandError(f"{path} does not exist") from error
    except json.JSONDecodeError as error:
        raise CommandError(f"{path} is not valid JSON: {error}") from error


class HarnessCommand(BaseCommand):
    """Runs ``run()`` and turns library errors into a nonzero exit."""

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except ValidationError as error:
            raise CommandError(f"invalid configuration: {error.detail}") from error
        except ActionHeadError as error:
            raise CommandError(f"{type(error).__name__}: {error}") from error
        except OSError as error:
            raise CommandError(str(error)) from error

    def run(self, **options):
        raise NotImplementedError

    def success(self, message: str) -> None:
        self.stdout.write(self.style.SUCCESS(message))

    def warning(self, message: str) -> None:
        self.stdout.write(self.style.WARNING(message))

    @staticmethod
    def output_path(path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path
