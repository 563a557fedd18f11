public abstract class O { abstract void f(); void g() { new O(); } }
