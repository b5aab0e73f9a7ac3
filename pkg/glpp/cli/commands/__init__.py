"""glpp CLI commands; each module registers itself on the shared app."""
