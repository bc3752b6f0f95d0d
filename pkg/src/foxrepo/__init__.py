"""Digital object repository with versioned datastreams, an RDF resource
index, REST access, and an OAI-PMH provider."""

__version__ = "0.1.0"
