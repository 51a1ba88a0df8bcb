from chemtune.evaluation.extract import extract_answer
from chemtune.evaluation.metrics import (
    accuracy,
    bleu,
    corpus_bleu,
    em_formula,
    em_iupac,
    em_smiles,
    fts,
    meteor_lite,
    rmse,
    rouge,
)
from chemtune.evaluation.scoring import (
    Prediction,
    ReferenceSet,
    ScoreError,
    TaskReport,
    score_task,
    top_k_em,
    validity_rate,
)
