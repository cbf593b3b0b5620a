from adaptive_parareal.ports.repositories import ChartRepositoryPort, ReportRepositoryPort

__all__ = [
    "ChartRepositoryPort",
    "ReportRepositoryPort",
]
