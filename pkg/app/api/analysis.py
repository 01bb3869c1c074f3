import numpy as np
from fastapi import APIRouter

from app.models.analysis import SolutionVector
from app.schemas.analysis import (
    L1Request,
    L1Response,
    SolutionVectorDocument,
    SpectrumRequest,
    SpectrumResponse,
)
from app.services import analysis_service

router = APIRouter(prefix="/api/v1/analysis", tags=["analysis"])


def _vector(doc: SolutionVectorDocument) -> SolutionVector:
    return SolutionVector(labels=tuple(doc.labels), z=np.array(doc.z), a=np.array(doc.a), sc_ref=doc.sc_ref)


@router.post("/l1", response_model=L1Response)
def l1_distance(body: L1Request):
    result = analysis_service.l1_distance(_vector(body.test), _vector(body.reference))
    return L1Response(
        distance=result.distance,
        contributions=dict(zip(result.labels, result.contributions.tolist())),
    )


@router.post("/spectrum", response_model=SpectrumResponse)
def soc_spectrum(body: SpectrumRequest):
    result = analysis_service.soc_spectrum(np.array(body.trace), body.r)
    return SpectrumResponse(frequency=result.frequency.tolist(), magnitude=result.magnitude.tolist())
