public class O { void f() { int y = 1 / "a".length() + true; } }
