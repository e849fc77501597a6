"""Federated learning over an LDPC-coded noisy downlink.

The server digitalizes the global model, protects it with a (3,6)-regular
LDPC code and broadcasts it over BPSK/AWGN; clients decode with a per-round
iteration budget chosen so the residual bit error rate follows a decaying
schedule.
"""

__version__ = "0.1.0"
