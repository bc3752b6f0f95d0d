"""Resource Index: triple extraction, embedded store, and conjunctive queries."""
