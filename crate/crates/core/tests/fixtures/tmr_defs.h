#define VERSION1 0
#define VERSION2 1
#define VERSION3 2
#define VERSION4 3
#define NODE1 1
#define NODE2 2
#define NODE3 3
#define NODE4 4
#define HAS_FAILED 9999
#define WAKEUP 10
#define TMR_PLUS_ONE_SPARE 40
#define TIMEOUT_VERSION 50
