"""
EnQSP samples: a library walkthrough (sample1_noisy_qsp) and runnable experiment configs under configs/.
"""

__all__ = ["sample1_noisy_qsp"]
