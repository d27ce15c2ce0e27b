import logging

from loguru import logger

from core.logging import setup_logging
from middleware.run_id import new_run_id, run_context


def _capture(records):
    return logger.add(lambda message: records.append(message.record), level="DEBUG")


def test_run_context_tags_records():
    records = []
    handler = _capture(records)
    try:
        with run_context("abcd1234") as run_id:
            logger.info("inside")
        logger.info("outside")
    finally:
        logger.remove(handler)
    assert run_id == "abcd1234"
    assert records[0]["extra"]["run_id"] == "abcd1234"
    assert "run_id" not in records[1]["extra"] or records[1]["extra"]["run_id"] != "abcd1234"


def test_new_run_id_is_short_hex():
    run_id = new_run_id()
    assert len(run_id) == 8
    int(run_id, 16)


def test_standard_logging_is_forwarded():
    setup_logging("DEBUG")
    records = []
    handler = _capture(records)
    try:
        logging.getLogger("scipy").warning("forwarded %s", "message")
    finally:
        logger.remove(handler)
    assert any(r["message"] == "forwarded message" and r["level"].name == "WARNING" for r in records)
    assert all(r["extra"].get("run_id") == "-" for r in records)
