#include <cstdio>
int main() { std::puts("ilcs: cli not wired up yet"); return 1; }
