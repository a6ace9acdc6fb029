"""Partial atomic charges from a message-passing network and charge equilibration."""

from graphqeq.molio import ChargeResult, Molecule, generate_chain, parse_mol2, parse_sdf, write_charge_file
from graphqeq.pipeline import charge, default_model

__all__ = [
    "ChargeResult",
    "Molecule",
    "charge",
    "default_model",
    "generate_chain",
    "parse_mol2",
    "parse_sdf",
    "write_charge_file",
]
__version__ = "0.1.0"
