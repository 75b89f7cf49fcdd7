from .catalog import catalog
from .check import RuleCheck, check_catalog, check_rule
from .core import (FULL, PREFIX, Catalog, InvalidSite, Rule, Site, all_sites, apply, apply_path,
                   match_sites, substitute, tile)

__all__ = ["FULL", "PREFIX", "Catalog", "InvalidSite", "Rule", "RuleCheck", "Site", "all_sites",
           "apply", "apply_path", "catalog", "check_catalog", "check_rule", "match_sites", "substitute", "tile"]
