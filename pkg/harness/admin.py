from django.contrib import admin

from harness.models import EvaluationReport, ExperimentRun


class EvaluationReportInline(admin.TabularInline):
    model = EvaluationReport
    extra = 0
    fields = ("mean_ap", "data_dir", "created_at")
    readonly_fields = ("created_at",)


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ("name", "seed", "status", "steps_completed", "final_loss")
    list_filter = ("status",)
    search_fields = ("name",)
    inlines = (EvaluationReportInline,)


admin.site.register(EvaluationReport)
