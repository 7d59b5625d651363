from importlib import resources

import pytest

from s2k.corpus import CleaningConfig, clean_document, segment_corpus
from s2k.pipeline.config import validate_config
from s2k.tokenizers import WordTokenizer


@pytest.fixture(scope="session")
def bundled_corpus_path() -> str:
    return str(resources.files("s2k.data").joinpath("corpus.jsonl"))


@pytest.fixture(scope="session")
def bundled_config_path() -> str:
    return str(resources.files("s2k.data").joinpath("mock_run.toml"))


@pytest.fixture(scope="session")
def bundled_config(bundled_config_path):
    return validate_config(bundled_config_path)


@pytest.fixture(scope="session")
def bundled_chunks(bundled_corpus_path, bundled_config):
    """Cleaned, segmented chunks of the bundled corpus under the bundled budget."""
    from s2k.corpus import load_documents
    from s2k.errors import EmptyAfterCleaning

    tokenizer = WordTokenizer()
    chunks = []
    for doc in load_documents(bundled_corpus_path):
        try:
            cleaned = clean_document(doc, CleaningConfig())
        except EmptyAfterCleaning:
            continue
        chunks.extend(segment_corpus(cleaned, bundled_config.corpus.budget, tokenizer))
    return chunks
