"""Differential testing of the ZH kernel against the exhaustive oracle."""

from .campaign import (CampaignConfig, CampaignResult, ConfigError, expand_corpus,
                       format_table, load_records, run_campaign)
from .core import (AGREE_NO, AGREE_YES, CLASSES, NECESSITY, ORACLE_UNKNOWN, SUFFICIENCY,
                   VerdictRecord, build_instance, classify, instance_from_bytes,
                   instance_from_formula, load_instance_file, run_one, run_provenance)
from .minimize import MinimizeResult, PredicateFlaky, minimize
from .serialize import (FormatVersionMismatch, HashMismatch, Instance, content_hash,
                        deserialize_instance, serialize_instance)
