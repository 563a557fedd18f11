public class N { void f() { java.util.Liste l = null; } }
