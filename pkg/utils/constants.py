from os import getenv

_ENV = getenv("ENVIRONMENT")  # "dev" or "prod"

# garbling
KAPPA = 128
LABEL_BYTES = KAPPA // 8
TAG_BYTES = 4
GARBLED_MAGIC = b"VGC1"
PIVOT_MAGIC = b"VPT1"

# fixed point, Q16.16
FIXED_WIDTH = 32
FIXED_FRACTION_BITS = 16
INT_WIDTH = 32

# transport
DEADLOCK_BUDGET = int(getenv("DEADLOCK_BUDGET", "10000"))
CHANNEL_TIMEOUT_SECONDS = float(getenv("CHANNEL_TIMEOUT_SECONDS", "5"))
LATENCY_PROFILES_MS = {"lan": 0.2, "wan": 50.0}
CHANNEL_LATENCY_MS = float(getenv("CHANNEL_LATENCY_MS", str(LATENCY_PROFILES_MS["lan"])))

# chain
INLINE_RESULT_LIMIT = 1024
ORACLE_RETURN_GAS = int(getenv("ORACLE_RETURN_GAS", "21000"))
_quorum = getenv("DEFAULT_QUORUM")
DEFAULT_QUORUM = int(_quorum) if _quorum else None  # None means k = n
GENESIS_DIGEST = "0" * 64

# mpcrun
OT_MODE = getenv("OT_MODE", "dealer")  # "dealer" or "group"
RETURN_RESULTS = getenv("RETURN_RESULTS", "1") == "1"
COMMIT_RESULTS = getenv("COMMIT_RESULTS", "1") == "1"

# preprocessing
SPDZ_PRIME = 2**61 - 1
MC_TRIALS = int(getenv("MC_TRIALS", "100000"))

# verification
VERIFY_BOUND = int(getenv("VERIFY_BOUND", "64"))
LEVEL2_BUDGET = int(getenv("LEVEL2_BUDGET", "1000"))
LEVEL2_ARRAY_LENGTH = 4
CERTIFICATE_OVERHEAD = 1.30
PCC_GEN_INTERCEPT = 1.5
PCC_GEN_BYTES_PER_SECOND = 1500
PCC_VERIFY_INTERCEPT = 0.25
PCC_VERIFY_BYTES_PER_SECOND = 6000

# gas reference prices
GAS_PER_MUL = 5
GAS_PER_SHA3_WORD = 2000
GWEI_PER_GAS = 21
USD_PER_ETH = 380
OFFCHAIN_SECONDS = 0.004
OFFCHAIN_USD_PER_HOUR = 0.02
OFFCHAIN_REFERENCE_USD = 0.000000022

# AND-gate counts reported for the contracts in the reference experiments
REFERENCE_AND_COUNTS = {
    "millionaire": 96,
    "second_price_auction": 192,
    "exchange_option": 267507,
    "fx_option": 323529,
    "crowdfund": 128,
    "dao_invest_fund": 2144,
    "double_auction": 567829,
}
CONTRACT_LABELS = {
    "millionaire": "Millionaire (int)",
    "second_price_auction": "Second-price Auction (int)",
    "exchange_option": "European Exchange Options (float)",
    "fx_option": "Currency Call Options (float)",
    "crowdfund": "Crowdfunding smart contract (int)",
    "dao_invest_fund": "DAO-like Investment Fund (int)",
    "double_auction": "Double auction (int)",
}

# RFC 3526 group 14 (2048-bit MODP); g = 2 generates the subgroup of prime order (p - 1) / 2
MODP_2048_PRIME = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1"
    "29024E088A67CC74020BBEA63B139B22514A08798E3404DD"
    "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245"
    "E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3D"
    "C2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
    "83655D23DCA3AD961C62F356208552BB9ED529077096966D"
    "670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9"
    "DE2BCBF6955817183995497CEA956AE515D2261898FA0510"
    "15728E5A8AACAA68FFFFFFFFFFFFFFFF",
    16,
)
MODP_2048_GENERATOR = 2
GROUP_EXPONENT_BITS = 256

NIKE_MAX_SET_SIZE = 16

# largest grid one VC is checked over; more variables shrink the bound
DISCHARGE_POINT_CAP = int(getenv("DISCHARGE_POINT_CAP", str(129**3)))
DISCHARGE_CHUNK = 1 << 20
