from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.api.anova import router as anova_router
from app.core.config import get_settings
from app.core.logging import configure_logging

settings = get_settings()
configure_logging(settings.log_level)

app = FastAPI(title="Grouped ANOVA Approximation")

# Origins come from ALLOWED_ORIGINS (comma-separated)
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.allowed_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.get("/")
async def root():
    return {"message": "Grouped ANOVA approximation up"}

app.include_router(anova_router, prefix="/anova")
