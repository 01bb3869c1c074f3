import logging

from fastapi import APIRouter

from app.api.deps import get_scenario
from app.models.candidate import CandidateSolution
from app.schemas.api import EvaluationRequest
from app.schemas.reports import CostReport
from app.services import costing_service

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api/v1/evaluations", tags=["evaluations"])


@router.post("", response_model=CostReport)
def evaluate_candidate(body: EvaluationRequest):
    s, rt = get_scenario(body.config_path, body.trace_dir)
    c = CandidateSolution.from_document(s, body.candidate)
    report = costing_service.objective(s, c, rt, early_exit=body.early_exit, precharge=body.precharge)
    logger.info("Evaluated candidate on '%s': SC %.6g", s.name, report.sc)
    return report
