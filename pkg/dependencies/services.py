"""Service 생성. 필요한 Repository 는 dependencies.repositories 에서 받는다"""
from dependencies.repositories import get_image_repository, get_result_repository
from services.benchmark import BenchmarkService
from services.pipeline import ReconstructionService


def get_reconstruction_service(record_timing: bool = True) -> ReconstructionService:
    return ReconstructionService(record_timing=record_timing)


def get_benchmark_service(record_timing: bool = True) -> BenchmarkService:
    return BenchmarkService(
        image_repo=get_image_repository(),
        result_repo=get_result_repository(),
        record_timing=record_timing,
    )
