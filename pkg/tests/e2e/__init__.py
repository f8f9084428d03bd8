"""Monte Carlo acceptance checks for laguerre-vcm.

These runs take minutes. Set VCM_RUN_E2E=1 to enable them.
"""
