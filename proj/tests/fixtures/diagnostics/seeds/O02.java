public class O { int f() { } }
