"""
Repository 생성
===============
CLI 명령은 저장소를 직접 만들지 않고 아래 팩토리를 통해 받는다.
테스트에서는 이 함수들을 monkeypatch 해서 다른 구현을 끼워 넣을 수 있다.
"""
from repositories.image_repository import ImageRepository
from repositories.measurement_repository import MeasurementRepository
from repositories.model_repository import ModelRepository
from repositories.result_repository import ResultRepository


def get_image_repository() -> ImageRepository:
    return ImageRepository()


def get_measurement_repository(text: bool = False) -> MeasurementRepository:
    return MeasurementRepository(text=text)


def get_model_repository() -> ModelRepository:
    return ModelRepository()


def get_result_repository() -> ResultRepository:
    return ResultRepository()
