"""NLWitness: accessible nonlinear entanglement witnesses."""
__version__ = "1.0.0"
