#define W1 1
#define W2 2
#define W3 3
#define N1 1
#define N2 2
#define N3 3
#define L 10
#define A 20
#define CLIENT 30
#define HEARTBEAT 100
#define EXPIRE 1000
#define ALARM 7
