from django.contrib.auth import get_user_model
from django.test import TestCase
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APIClient

from harness.models import EvaluationReport, ExperimentRun

RUNS_URL = reverse("harness:experimentrun-list")
REPORTS_URL = reverse("harness:evaluationreport-list")


def run_detail_url(run_id):
    return reverse("harness:experimentrun-detail", args=[run_id])


def sample_run(**params):
    defaults = {
        "name": "cycle-d2",
        "seed": 0,
        "config": {"cycle": {"mode": "cycle"}},
        "status": ExperimentRun.Status.FINISHED,
        "steps_completed": 10,
        "final_loss": 0.25,
        "checkpoint_dir": "artifacts/runs/cycle-d2",
    }
    defaults.update(params)
    return ExperimentRun.objects.create(**defaults)


def sample_report(run=None, **params):
    defaults = {
        "run": run,
        "data_dir": "artifacts/data",
        "mean_ap": 0.5,
        "per_class_ap": [0.5, None],
        "excluded_classes": [1],
        "category_ap": {"pose": 0.5},
    }
    defaults.update(params)
    return EvaluationReport.objects.create(**defaults)


class UnauthenticatedApiTest(TestCase):
    def setUp(self):
        self.client = APIClient()

    def test_auth_required(self):
        res = self.client.get(RUNS_URL)
        self.assertEqual(res.status_code, status.HTTP_401_UNAUTHORIZED)


class AuthenticatedApiTest(TestCase):
    def setUp(self):
        self.client = APIClient()
        self.user = get_user_model().objects.create_user(
            username="researcher", password="researcher-password"
        )
        self.client.force_authenticate(user=self.user)

    def test_list_runs_with_report_counts(self):
        run = sample_run()
        sample_report(run)
        sample_report(run)
        sample_run(name="c2a-d2")

        res = self.client.get(RUNS_URL)

        self.assertEqual(res.status_code, status.HTTP_200_OK)
        self.assertEqual(res.data["count"], 2)
        counts = {row["name"]: row["reports_count"] for row in res.data["results"]}
        self.assertEqual(counts, {"cycle-d2": 2, "c2a-d2": 0})

    def test_filter_runs(self):
        sample_run()
        sample_run(name="a2c-d1", status=ExperimentRun.Status.DIVERGED)

        res = self.client.get(RUNS_URL, {"status": "diverged"})
        self.assertEqual([row["name"] for row in res.data["results"]], ["a2c-d1"])
        res = self.client.get(RUNS_URL, {"name": "CYCLE"})
        self.assertEqual([row["name"] for row in res.data["results"]], ["cycle-d2"])

    def test_run_detail(self):
        run = sample_run()
        res = self.client.get(run_detail_url(run.id))
        self.assertEqual(res.status_code, status.HTTP_200_OK)
        self.assertEqual(res.data["config"], {"cycle": {"mode": "cycle"}})
        self.assertEqual(res.data["checkpoint_dir"], "artifacts/runs/cycle-d2")

    def test_filter_reports_by_run(self):
        run = sample_run()
        sample_report(run, mean_ap=0.75)
        sample_report(None)

        res = self.client.get(REPORTS_URL, {"run": str(run.id)})
        self.assertEqual(res.data["count"], 1)
        self.assertEqual(res.data["results"][0]["run_name"], "cycle-d2")
        self.assertEqual(res.data["results"][0]["mean_ap"], 0.75)
        res = self.client.get(REPORTS_URL, {"run": "latest"})
        self.assertEqual(res.data["count"], 2)

    def test_read_only(self):
        res = self.client.post(RUNS_URL, {"name": "new"})
        self.assertEqual(res.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)
