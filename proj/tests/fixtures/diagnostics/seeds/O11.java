public class O { void f() { return 5; } }
