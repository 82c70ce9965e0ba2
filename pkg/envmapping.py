QNET_OUTPUT_DIR_ENV = "QNET_OUTPUT_DIR"
QNET_NETWORK_PATHS_ENV = "QNET_NETWORK_PATHS"
QNET_PATH_CAP_ENV = "QNET_PATH_CAP"
QNET_DEBUG_ENV = "QNET_DEBUG"
