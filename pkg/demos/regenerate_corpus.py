"""Rebuild the bundled synthetic corpus.

    python demos/regenerate_corpus.py [dest]

Without an argument the package data directory is overwritten; the files
are deterministic, so a rebuild should leave git clean.
"""
import sys

from skintone.corpus import DATA_DIR, build_corpus

dest = sys.argv[1] if len(sys.argv) > 1 else DATA_DIR
print("corpus written to", build_corpus(dest))
