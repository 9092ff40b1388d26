"""Frozen oracle values; regenerate with tests/derive_frozen.py."""

EXACT_VARIANCE = {('three_point', 2, 3): 0.2916666666666667, ('three_point', 2, 20): 0.033125, ('three_point', 3, 3): 0.2749565972222222, ('three_point', 3, 20): 0.01822265625, ('three_point', 4, 3): 0.3101128472222222, ('three_point', 4, 20): 0.00965703125, ('uniform8', 2, 3): 0.04861111111111111, ('uniform8', 2, 20): 0.00375, ('uniform8', 3, 3): 0.008110894097222222, ('uniform8', 3, 20): 0.00020947265625, ('uniform8', 4, 3): 0.0017112449363425927, ('uniform8', 4, 20): 1.1767578125e-05}
MAJORITY_9_OF_TWO_THIRDS = 0.8551541939744958
P_OF_S_PASS_AT_HALF = 0.998182526023735
P_OF_S_PASS_AT_0_3 = 0.0016368053245546328
MI_CONTRIBUTION = {1000: (2000000, 215.44346900318837, 0.0001686199014007129), 10000: (20000000, 1000.0, 0.00016364786582600852), 100000: (200000000, 4641.588833612779, 0.0001613382375201216)}  # n -> (N, k, N*I)
