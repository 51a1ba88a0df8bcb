from chemtune.corpus.ingest import DescriptionFilter, IngestError, IngestResult, SourceSpec, ingest_source, ingest_table
from chemtune.corpus.records import (
    TASKS,
    CorpusRecord,
    InstructionSample,
    JsonlError,
    Payload,
    export_jsonl,
    import_jsonl,
)
from chemtune.corpus.render import TemplateError, TemplateSet, render, render_all
from chemtune.corpus.split import (
    LinkageKey,
    UnionFind,
    assign_splits,
    dedup,
    leakage_audit,
    linkage_groups,
    linkage_keys,
    scaffold_split,
)
